#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mdpsat/mdp.hpp"
#include "mdpsat/nfa.hpp"
#include "mdpsat/scheduler.hpp"

using namespace mdpsat;

namespace {

// Two interior states, one goal trap, one fail trap.
Mdp sample_model() {
    Mdp m;
    int s0 = m.add_state("s0", {"init"});
    int s1 = m.add_state("s1");
    int goal = m.add_state("goal", {"done"});
    int fail = m.add_state("fail");
    m.initial = s0;
    m.goal = {goal};
    m.fail = {fail};
    m.make_absorbing(goal);
    m.make_absorbing(fail);
    Action& a = m.add_action(s0, "a", 2);
    a.branches.push_back(Transition{s1, Rat(1, 2)});
    a.branches.push_back(Transition{goal, Rat(1, 2)});
    Action& b = m.add_action(s0, "b", 0);
    b.branches.push_back(Transition{fail, Rat(1)});
    Action& c = m.add_action(s1, "c", -1);
    c.branches.push_back(Transition{goal, Rat(3, 4)});
    c.branches.push_back(Transition{fail, Rat(1, 4)});
    return m;
}

}  // namespace

TEST_CASE("serialize / parse roundtrip") {
    Mdp m = sample_model();
    Mdp back = parse_mdp(serialize_mdp(m));
    CHECK(mdp_equal(m, back));
    CHECK(back.states[back.initial].id == "s0");
    CHECK(back.is_goal(back.state_index("goal")));
    CHECK(back.is_fail(back.state_index("fail")));
    CHECK(back.states[back.state_index("s1")].actions[0].weight == -1);
}

TEST_CASE("parse rejects malformed documents") {
    CHECK_THROWS_AS(parse_mdp("not json"), Error);
    CHECK_THROWS_AS(parse_mdp("{}"), Error);
    // Probabilities must sum to one.
    Mdp m = sample_model();
    std::string doc = serialize_mdp(m);
    std::string broken = doc;
    auto pos = broken.find("\"3/4\"");
    REQUIRE(pos != std::string::npos);
    broken.replace(pos, 5, "\"1/4\"");
    CHECK_THROWS_AS(parse_mdp(broken), Error);
}

TEST_CASE("state lookup") {
    Mdp m = sample_model();
    CHECK(m.state_index("s1") == 1);
    CHECK(m.find_state("nope") == -1);
    CHECK_THROWS_AS(m.state_index("nope"), Error);
}

TEST_CASE("labels are sorted and unique") {
    Mdp m;
    m.add_state("x", {"b", "a", "b"});
    CHECK(m.states[0].labels == std::vector<std::string>{"a", "b"});
}

TEST_CASE("validate_mdp flags broken models") {
    Mdp m = sample_model();
    CHECK(validate_mdp(m).empty());
    m.states[0].actions[0].branches[0].prob = Rat(1, 3);
    CHECK(!validate_mdp(m).empty());
}

TEST_CASE("max_abs_weight and weight sign check") {
    Mdp m = sample_model();
    CHECK(m.max_abs_weight() == 2);
    CHECK(!m.weights_nonnegative());
    m.states[1].actions[0].weight = 0;
    CHECK(m.weights_nonnegative());
}

TEST_CASE("reachable_states") {
    Mdp m = sample_model();
    CHECK(reachable_states(m).size() == 4);
    int orphan = m.add_state("orphan");
    m.make_absorbing(orphan);
    CHECK(reachable_states(m).size() == 4);
}

// ---- scheduler plumbing ----

TEST_CASE("memoryless induced chain and absorption") {
    Mdp m = sample_model();
    MemorylessPolicy pol(m.num_states());
    for (int& c : pol.choice) c = 0;
    InducedChain chain = induce_chain(m, pol);
    // One node per reachable state under a memoryless policy.
    CHECK(chain.num_nodes() == 4);
    std::vector<char> target(chain.num_nodes(), 0);
    for (int v = 0; v < chain.num_nodes(); ++v)
        if (m.is_goal(chain.nodes[v].state)) target[v] = 1;
    std::vector<Rat> p = chain_until_prob(chain.rows, target,
                                          std::vector<char>(chain.num_nodes(), 0));
    CHECK(p[chain.initial] == Rat(1, 2) + Rat(1, 2) * Rat(3, 4));
}

TEST_CASE("scheduler missing a choice throws SchedulerPartial") {
    Mdp m = sample_model();
    MemorylessPolicy pol(m.num_states());
    // s0 has two actions and no choice; single-action states may stay unset.
    CHECK_THROWS_AS(induce_chain(m, pol), Error);
}

TEST_CASE("weight-memory mode update semantics") {
    Mdp m = sample_model();
    WeightMemoryScheduler s;
    s.cap = 3;
    int goal = m.state_index("goal");
    int s0 = m.state_index("s0");
    CHECK(s.next_mode(m, s0, 2, 2, s0) == 3);       // capped
    CHECK(s.next_mode(m, s0, 1, -4, s0) == -3);     // cap is an upper bound only
    s.resetOnGoalFail = true;
    CHECK(s.next_mode(m, s0, 1, 2, goal) == 0);     // reset on entering a trap
    s.segmentMode = true;
    CHECK(s.next_mode(m, goal, 1, 2, s0) == 0);     // reset on leaving a trap
    WeightMemoryScheduler unc;
    unc.cap = -1;
    CHECK(unc.next_mode(m, s0, 10, 7, s0) == 17);   // uncapped
}

TEST_CASE("weight unfolding terminals") {
    Mdp m = sample_model();
    m.states[1].actions[0].weight = 1;  // make all weights non-negative
    Unfolding u = weight_unfold(m, 2);
    // Every terminal is a goal level or a saturated state, with the weight
    // recorded.
    CHECK(!u.terminalWeight.empty());
    for (const auto& [node, w] : u.terminalWeight) {
        bool isGoal = u.goalTerminals.count(node) > 0;
        bool isSat = u.saturatedTerminals.count(node) > 0;
        CHECK((isGoal || isSat));
        if (isSat) CHECK(w == 2);
        CHECK(w <= 2);
    }
}

TEST_CASE("chain BSCCs, steady state, expected steps") {
    // Deterministic 2-cycle plus a transient entry.
    ChainRows rows(3);
    rows[0] = {{1, Rat(1)}};
    rows[1] = {{2, Rat(1)}};
    rows[2] = {{1, Rat(1)}};
    auto bsccs = chain_bsccs(rows);
    REQUIRE(bsccs.size() == 1);
    CHECK(bsccs[0] == std::vector<int>{1, 2});
    std::vector<Rat> pi = chain_steady_state(rows, bsccs[0]);
    CHECK(pi[0] == 0);
    CHECK(pi[1] == Rat(1, 2));
    CHECK(pi[2] == Rat(1, 2));
    std::vector<char> target{0, 0, 1};
    auto steps = chain_expected_steps(rows, target, 0);
    REQUIRE(steps.has_value());
    CHECK(*steps == 2);
}

// ---- guards and automata ----

TEST_CASE("guard parsing and evaluation") {
    GuardExpr g = parse_guard("a & !(b | c)");
    CHECK(guard_eval(g, {"a"}));
    CHECK(!guard_eval(g, {"a", "b"}));
    CHECK(!guard_eval(g, {"c"}));
    CHECK_THROWS_AS(parse_guard("a &"), Error);
}

TEST_CASE("nfa good-prefix acceptance and roundtrip") {
    Nfa a;
    a.states = {"q0", "q1"};
    a.initial = 0;
    a.accepting = {1};
    a.add_transition("q0", "x", "q0");
    a.add_transition("q0", "y", "q1");
    CHECK(a.accepts_word({{"x"}, {"x"}, {"y"}}));
    CHECK(a.accepts_word({{"y"}, {"x"}}));  // a good prefix suffices
    CHECK(!a.accepts_word({{"x"}, {"x"}}));
    Nfa back = parse_nfa(serialize_nfa(a));
    CHECK(back.accepts_word({{"x"}, {"y"}}));
    CHECK(!back.accepts_word({{"x"}}));
}
