#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mdpsat/graph.hpp"

using namespace mdpsat;

namespace {

// The worked long-run example: one controllable state, two goal states, one
// fail state, all three returning to the start.
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

Mdp coin_ladder() {
    // s0 -> s1 -> goal with a fail escape; acyclic interior.
    Mdp m;
    int s0 = m.add_state("s0");
    int s1 = m.add_state("s1");
    int goal = m.add_state("goal");
    int fail = m.add_state("fail");
    m.initial = s0;
    m.goal = {goal};
    m.fail = {fail};
    m.make_absorbing(goal);
    m.make_absorbing(fail);
    Action& a = m.add_action(s0, "a", 1);
    a.branches.push_back(Transition{s1, Rat(1, 2)});
    a.branches.push_back(Transition{fail, Rat(1, 2)});
    Action& b = m.add_action(s0, "b", 0);
    b.branches.push_back(Transition{goal, Rat(1)});
    Action& c = m.add_action(s1, "c", 2);
    c.branches.push_back(Transition{goal, Rat(1)});
    return m;
}

}  // namespace

TEST_CASE("mec decomposition") {
    Mdp m = longrun_example();
    MecDecomposition dec = mec_decompose(m);
    REQUIRE(dec.mecs.size() == 1);
    CHECK(dec.mecs[0].states.size() == 4);
    CHECK(dec.mecs[0].positiveWeight);
    for (int s = 0; s < m.num_states(); ++s) CHECK(dec.mecOf[s] == 0);

    Mdp two = coin_ladder();
    MecDecomposition d2 = mec_decompose(two);
    // Two trap MECs (goal and fail self loops).
    CHECK(d2.mecs.size() == 2);
    CHECK(d2.mecOf[two.state_index("s0")] == -1);
}

TEST_CASE("max and min reachability") {
    Mdp m = coin_ladder();
    ReachMaxData r = max_reach_prob(m, m.goal, m.fail);
    CHECK(r.pmax[m.initial] == 1);  // action b reaches goal surely
    CHECK(r.pmaxAction[m.initial][0] == Rat(1, 2));
    CHECK(r.pmaxAction[m.initial][1] == 1);
    CHECK(r.gapDelta == Rat(1, 2));
    std::vector<Rat> mn = min_reach_prob(m, m.goal);
    CHECK(mn[m.initial] == Rat(1, 2));  // action a fails half the time
}

TEST_CASE("prob1 sets and attractor") {
    Mdp m = coin_ladder();
    std::vector<int> p1 = prob1_max(m, m.goal);
    CHECK(std::find(p1.begin(), p1.end(), m.initial) != p1.end());
    Prob1Attractor at = prob1_max_attractor(m, m.goal);
    CHECK(at.inP1[m.initial]);
    CHECK(at.attractor.at(m.initial) == 1);  // must pick the sure action b
}

TEST_CASE("acyclic check") {
    CHECK(acyclic_check(coin_ladder()).acyclic);
    AcyclicResult r = acyclic_check(longrun_example());
    CHECK(!r.acyclic);
    CHECK(!r.cycle.empty());
}

TEST_CASE("sspp preprocess produces the goal-only normal form") {
    Mdp m = coin_ladder();
    m.fail.clear();  // treat fail as an ordinary dead end -> GoalUnreachable
    CHECK_THROWS_AS(sspp_preprocess(m), Error);

    Mdp ok;
    int s0 = ok.add_state("s0");
    int g = ok.add_state("goal");
    ok.initial = s0;
    ok.goal = {g};
    ok.make_absorbing(g);
    Action& a = ok.add_action(s0, "a", 1);
    a.branches.push_back(Transition{s0, Rat(1, 2)});
    a.branches.push_back(Transition{g, Rat(1, 2)});
    Mdp normal = sspp_preprocess(ok);
    MecDecomposition dec = mec_decompose(normal);
    REQUIRE(dec.mecs.size() == 1);
    CHECK(normal.is_goal(dec.mecs[0].states[0]));
}

TEST_CASE("min expected steps") {
    Mdp m;
    int s0 = m.add_state("s0");
    int s1 = m.add_state("s1");
    m.initial = s0;
    Action& a = m.add_action(s0, "a", 0);
    a.branches.push_back(Transition{s0, Rat(1, 2)});
    a.branches.push_back(Transition{s1, Rat(1, 2)});
    m.make_absorbing(s1);
    CHECK(min_expected_steps(m, s0, s1) == 2);
}

TEST_CASE("saturation constants of the long-run example") {
    Mdp m = longrun_example();
    std::set<int> goal{m.state_index("goal1"), m.state_index("goal2")};
    std::set<int> fail{m.state_index("fail")};
    SaturationData sat = wlf_saturation_point(m, goal, fail);
    CHECK(sat.W == 3);
    CHECK(sat.delta == Rat(1, 4));
    CHECK(sat.e == 2);
    CHECK(sat.sPrime == 1);
    // K = ceil(max(W e / delta, W (|S'| + 1))) = max(24, 6).
    CHECK(sat.K == 24);
}
