#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mdpsat/cvar.hpp"
#include "mdpsat/oracle.hpp"

using namespace mdpsat;

namespace {

TerminalDist hand_dist() {
    TerminalDist d;
    d.atoms[Int(-2)] = Rat(1, 4);
    d.atoms[Int(0)] = Rat(1, 4);
    d.atoms[Int(5)] = Rat(1, 2);
    return d;
}

// One decision: a sure weight of 2, or a half-half law on {0, 6}.
Mdp risk_model() {
    Mdp m;
    int s0 = m.add_state("s0");
    int s1 = m.add_state("s1");
    int g = m.add_state("goal");
    m.initial = s0;
    m.goal = {g};
    m.make_absorbing(g);
    Action& safe = m.add_action(s0, "safe", 2);
    safe.branches.push_back(Transition{g, Rat(1)});
    Action& risky = m.add_action(s0, "risky", 0);
    risky.branches.push_back(Transition{g, Rat(1, 2)});
    risky.branches.push_back(Transition{s1, Rat(1, 2)});
    Action& end = m.add_action(s1, "end", 6);
    end.branches.push_back(Transition{g, Rat(1)});
    return m;
}

Rat dual_value(const TerminalDist& d, const Rat& p) {
    // max over candidate v of  v + (1/p) E(min(X - v, 0)); the optimum is
    // attained at a support point.
    bool first = true;
    Rat best(0);
    for (const auto& [v, pv] : d.atoms) {
        (void)pv;
        Rat val = Rat(v);
        for (const auto& [x, px] : d.atoms)
            if (x < v) val += (Rat(x) - Rat(v)) * px / p;
        if (first || val > best) best = val;
        first = false;
    }
    return best;
}

}  // namespace

TEST_CASE("value-at-risk of a hand distribution") {
    TerminalDist d = hand_dist();
    CHECK(var_of_dist(d, Rat(1, 4)) == 0);
    CHECK(var_of_dist(d, Rat(1, 2)) == 5);
    CHECK(var_of_dist(d, Rat(3, 4)) == 5);
    CHECK(var_of_dist(d, Rat(1)) == 5);
}

TEST_CASE("conditional value-at-risk of a hand distribution") {
    TerminalDist d = hand_dist();
    CHECK(cvar_of_dist(d, Rat(1, 4)) == -2);
    CHECK(cvar_of_dist(d, Rat(1, 2)) == -1);
    CHECK(cvar_of_dist(d, Rat(3, 4)) == 1);
}

TEST_CASE("rational-support overloads agree with the integer ones") {
    TerminalDist d = hand_dist();
    std::map<Rat, Rat> atoms;
    for (const auto& [w, p] : d.atoms) atoms[Rat(w)] = p;
    CHECK(var_of_dist(atoms, Rat(1, 2)) == 5);
    CHECK(cvar_of_dist(atoms, Rat(1, 2)) == cvar_of_dist(d, Rat(1, 2)));
}

TEST_CASE("dual representation on random distributions") {
    std::mt19937_64 rng(corpus_seed());
    for (int t = 0; t < 40; ++t) {
        TerminalDist d = random_dist(rng, 2 + (int)(t % 4), 8);
        for (const Rat& p : {Rat(1, 4), Rat(1, 2), Rat(3, 4)})
            CHECK(dual_value(d, p) == cvar_of_dist(d, p));
    }
}

TEST_CASE("saturation requires the normal form") {
    Mdp m = risk_model();
    CvarSaturation sat = cvar_saturation(m, Rat(1, 2));
    CHECK(sat.W == 6);
    CHECK(sat.K == sat.ell * sat.N * sat.W);

    Mdp loop = risk_model();
    Action& stay = loop.add_action(loop.state_index("s1"), "stay", 0);
    stay.branches.push_back(Transition{loop.state_index("s1"), Rat(1)});
    CHECK_THROWS_AS(cvar_saturation(loop, Rat(1, 2)), Error);
}

TEST_CASE("maximal CVaR on the two-action model") {
    Mdp m = risk_model();
    CvarResult half = cvar_max(m, CvarQuery{Rat(1, 2), false});
    CHECK(half.value == 2);  // safe beats risky (whose lower half is worth 0)
    CvarResult quarter = cvar_max(m, CvarQuery{Rat(1, 4), false});
    CHECK(quarter.value == 2);
    // With high outcomes bad the controller avoids the risky branch (whose
    // worst half is 6) and settles for the sure 2.
    CvarResult high = cvar_max_high_bad(m, CvarQuery{Rat(1, 2), true});
    CHECK(high.value == 2);
}

TEST_CASE("solver agrees with exhaustive enumeration") {
    std::mt19937_64 rng(corpus_seed() + 1);
    CorpusOptions opt;
    opt.acyclic = true;
    opt.withFail = false;
    SchedulerSpace sp;
    sp.kind = SchedulerSpace::Kind::AcyclicHistory;
    int done = 0;
    while (done < 8) {
        Mdp m = random_model(rng, opt);
        if (enumeration_count(m, sp) > 2048) continue;
        for (const Rat& p : {Rat(1, 4), Rat(1, 2)}) {
            BruteResult br = brute_cvar(m, sp, p);
            CvarResult sol = cvar_max(m, CvarQuery{p, false});
            CHECK(br.value == sol.value);
        }
        ++done;
    }
}
