#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mdpsat/longrun.hpp"

using namespace mdpsat;

namespace {

Mdp longrun_example() {
    Mdp m;
    int si = m.add_state("sinit");
    int g1 = m.add_state("goal1");
    int g2 = m.add_state("goal2");
    int f = m.add_state("fail");
    m.initial = si;
    Action& al = m.add_action(si, "alpha", 3);
    al.branches.push_back(Transition{si, Rat(1, 2)});
    al.branches.push_back(Transition{f, Rat(1, 4)});
    al.branches.push_back(Transition{g1, Rat(1, 4)});
    Action& be = m.add_action(si, "beta", 2);
    be.branches.push_back(Transition{g2, Rat(1)});
    for (int v : {g1, g2, f}) {
        Action& r = m.add_action(v, "tau", 0);
        r.branches.push_back(Transition{si, Rat(1)});
    }
    return m;
}

LongRunSpec example_spec(const Mdp& m) {
    return LongRunSpec{{m.state_index("goal1"), m.state_index("goal2")},
                       {m.state_index("fail")}};
}

}  // namespace

TEST_CASE("gain/bias policy iteration on a two-state chain") {
    MeanPayoffMdp mp;
    mp.states.resize(2);
    mp.states[0].actions.push_back({Rat(1), {{0, Rat(1)}}});  // stay, reward 1
    mp.states[0].actions.push_back({Rat(0), {{1, Rat(1)}}});  // move, reward 0
    mp.states[1].actions.push_back({Rat(2), {{1, Rat(1)}}});  // stay, reward 2
    mp.initial = 0;
    MeanPayoffResult r = mean_payoff_max(mp);
    CHECK(r.gain == 2);
    CHECK(r.gains[0] == 2);
    CHECK(r.witness.at(0) == 1);
}

TEST_CASE("per-scheduler weighted long-run frequency on the worked example") {
    Mdp m = longrun_example();
    LongRunSpec spec = example_spec(m);

    MemorylessPolicy alphaOnly(m.num_states());
    for (int& c : alphaOnly.choice) c = 0;
    CHECK(evaluate_fm_wlf(m, spec, alphaOnly) == 1);

    MemorylessPolicy betaOnly = alphaOnly;
    betaOnly.choice[m.state_index("sinit")] = 1;
    CHECK(evaluate_fm_wlf(m, spec, betaOnly) == 1);

    // Segment-weight scheduler: beta once the segment reaches weight 3.
    WeightMemoryScheduler two;
    two.cap = 24;
    two.resetOnGoalFail = true;
    two.segmentMode = true;
    two.choice[{m.state_index("sinit"), Int(0)}] = 0;  // alpha
    two.choice[{m.state_index("sinit"), Int(3)}] = 1;  // beta
    for (const char* trap : {"goal1", "goal2", "fail"})
        two.choice[{m.state_index(trap), Int(0)}] = 0;
    CHECK(evaluate_fm_wlf(m, spec, two) == Rat(13, 10));
}

TEST_CASE("optimal weighted long-run frequency on the worked example") {
    Mdp m = longrun_example();
    WlfResult r = wlf_max(m, example_spec(m));
    CHECK(r.value == Rat(13, 10));
    CHECK(r.saturation.K == 24);
    CHECK(evaluate_fm_wlf(m, example_spec(m), r.witness) == Rat(13, 10));
}

TEST_CASE("spec sets must cover every end component") {
    Mdp m = longrun_example();
    LongRunSpec empty;  // the single end component avoids Goal and Fail
    CHECK_THROWS_AS(wlf_max(m, empty), Error);
}

TEST_CASE("long-run automaton probability on a labeled cycle") {
    Mdp m;
    int sa = m.add_state("sa", {"a"});
    int sb = m.add_state("sb", {"b"});
    m.initial = sa;
    Action& x = m.add_action(sa, "x", 0);
    x.branches.push_back(Transition{sb, Rat(1)});
    Action& y = m.add_action(sb, "y", 0);
    y.branches.push_back(Transition{sa, Rat(1)});

    Nfa nfa;
    nfa.states = {"q0", "acc"};
    nfa.initial = 0;
    nfa.accepting = {1};
    nfa.add_transition("q0", "b", "acc");

    MemorylessPolicy pol(m.num_states());
    for (int& c : pol.choice) c = 0;
    // Exactly the positions sitting at sb have a good prefix.
    CHECK(evaluate_fm_lrp_nfa(m, nfa, pol) == Rat(1, 2));
}

TEST_CASE("qualitative frequency check on the alternating cycle") {
    Mdp m;
    int sa = m.add_state("sa", {"a"});
    int sb = m.add_state("sb", {"b"});
    m.initial = sa;
    Action& x = m.add_action(sa, "x", 0);
    x.branches.push_back(Transition{sb, Rat(1)});
    Action& y = m.add_action(sb, "y", 0);
    y.branches.push_back(Transition{sa, Rat(1)});

    // Every position's suffix satisfies "a until b", so the density is 1:
    // the threshold query holds exactly for theta < 1.
    for (const Rat& theta : {Rat(0), Rat(1, 2), Rat(9, 10)})
        CHECK(fltl_qualitative(m, FreqQuery{theta, "a", "b"}).holds);
    for (const Rat& theta : {Rat(1), Rat(3, 2)})
        CHECK(!fltl_qualitative(m, FreqQuery{theta, "a", "b"}).holds);
}
