#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mdpsat/graph.hpp"
#include "mdpsat/longrun.hpp"
#include "mdpsat/oracle.hpp"
#include "mdpsat/sspp.hpp"

using namespace mdpsat;

namespace {

Mdp two_action_line() {
    Mdp m;
    int s0 = m.add_state("s0");
    int g = m.add_state("g");
    m.goal = {g};
    m.make_absorbing(g);
    m.initial = s0;
    for (int a = 0; a < 2; ++a) {
        Action& act = m.add_action(s0, "a" + std::to_string(a), a);
        act.branches.push_back(Transition{g, Rat(1)});
    }
    return m;
}

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

}  // namespace

TEST_CASE("enumeration counts and materialization") {
    Mdp m = two_action_line();
    SchedulerSpace sp;
    sp.kind = SchedulerSpace::Kind::Memoryless;
    CHECK(enumeration_count(m, sp) == 2);
    SchedulerEnumeration en = enumerate_schedulers(m, sp);
    CHECK(en.count == 2);
    CHECK((Int)en.members.size() == en.count);

    sp.kind = SchedulerSpace::Kind::AcyclicHistory;
    CHECK(enumeration_count(m, sp) == 2);
}

TEST_CASE("infinite spaces are rejected") {
    Mdp m = longrun_example();
    SchedulerSpace sp;
    sp.kind = SchedulerSpace::Kind::AcyclicHistory;  // the model is cyclic
    CHECK_THROWS_AS(enumerate_schedulers(m, sp), Error);
    sp.kind = SchedulerSpace::Kind::WeightMemory;
    sp.cap = -1;  // uncapped
    CHECK_THROWS_AS(enumerate_schedulers(m, sp), Error);
}

TEST_CASE("terminal law of a two-branch chain") {
    Mdp m;
    int s0 = m.add_state("s0");
    int g = m.add_state("g");
    m.goal = {g};
    m.make_absorbing(g);
    m.initial = s0;
    Action& a = m.add_action(s0, "a", 0);
    a.branches.push_back(Transition{g, Rat(1, 2)});
    int mid = m.add_state("mid");
    a.branches.push_back(Transition{mid, Rat(1, 2)});
    Action& b = m.add_action(mid, "b", 10);
    b.branches.push_back(Transition{g, Rat(1)});
    MemorylessPolicy pol(m.num_states());
    for (int& c : pol.choice) c = 0;
    TerminalDist law = terminal_law(m, induce_chain(m, pol));
    REQUIRE(law.atoms.size() == 2);
    CHECK(law.atoms.at(Int(0)) == Rat(1, 2));
    CHECK(law.atoms.at(Int(10)) == Rat(1, 2));
    ChainValues cv = chain_values(m, induce_chain(m, pol));
    CHECK(cv.goalProb == 1);
    CHECK(cv.pe == 5);
}

TEST_CASE("terminal law requires goal to be almost sure") {
    Mdp m = two_action_line();
    int f = m.add_state("f");
    m.fail = {f};
    m.make_absorbing(f);
    m.states[0].actions[0].branches = {Transition{f, Rat(1, 2)},
                                       Transition{m.state_index("g"), Rat(1, 2)}};
    MemorylessPolicy pol(m.num_states());
    for (int& c : pol.choice) c = 0;
    CHECK_THROWS_AS(terminal_law(m, induce_chain(m, pol)), Error);
}

TEST_CASE("brute partial expectation picks the heavier action") {
    Mdp m = two_action_line();
    SchedulerSpace sp;
    sp.kind = SchedulerSpace::Kind::Memoryless;
    BruteResult mx = brute_pe(m, sp, true);
    CHECK(mx.value == 1);
    CHECK(mx.choices.at("s0") == "a1");
    BruteResult mn = brute_pe(m, sp, false);
    CHECK(mn.value == 0);
}

TEST_CASE("brute conditional expectation skips goal-missing members") {
    Mdp m = two_action_line();
    int f = m.add_state("f");
    m.fail = {f};
    m.make_absorbing(f);
    m.states[0].actions[0].branches = {Transition{f, Rat(1)}};  // a0 never reaches goal
    SchedulerSpace sp;
    sp.kind = SchedulerSpace::Kind::Memoryless;
    BruteResult r = brute_ce(m, sp, true);
    CHECK(r.value == 1);  // only a1 counts
}

TEST_CASE("brute weighted long-run frequency matches the solver on the example") {
    Mdp m = longrun_example();
    LongRunSpec spec{{m.state_index("goal1"), m.state_index("goal2")},
                     {m.state_index("fail")}};
    SaturationData sat =
        wlf_saturation_point(m, spec.goalSet, spec.failSet);
    SchedulerSpace sp;
    sp.kind = SchedulerSpace::Kind::WeightMemory;
    sp.cap = sat.K;
    sp.resetOnGoalFail = true;
    sp.segmentMode = true;
    BruteResult br = brute_wlf(m, spec, sp);
    WlfResult solver = wlf_max(m, spec);
    CHECK(br.value == Rat(13, 10));
    CHECK(br.value == solver.value);
}

TEST_CASE("corpus generators produce valid reachable models") {
    std::mt19937_64 rng(corpus_seed() + 7);
    CorpusOptions opt;
    for (int t = 0; t < 10; ++t) {
        Mdp m = random_model(rng, opt);
        CHECK(validate_mdp(m).empty());
        CHECK((int)reachable_states(m).size() == m.num_states());
    }
    for (int t = 0; t < 10; ++t) {
        Mdp sc = random_strongly_connected(rng, 4, 2, 2);
        CHECK(validate_mdp(sc).empty());
        MecDecomposition dec = mec_decompose(sc);
        REQUIRE(dec.mecs.size() == 1);
        CHECK((int)dec.mecs[0].states.size() == sc.num_states());
    }
    for (int t = 0; t < 10; ++t) {
        TerminalDist d = random_dist(rng, 3, 5);
        Rat total(0);
        for (const auto& [w, p] : d.atoms) total += p;
        CHECK(total == 1);
    }
}

TEST_CASE("seed honors the environment override") {
    CHECK(corpus_seed() == corpus_seed());
}
