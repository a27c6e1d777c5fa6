#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mdpsat/gadget.hpp"
#include "mdpsat/longrun.hpp"

using namespace mdpsat;

namespace {

Lrs sample_lrs() {
    return parse_lrs(R"({"k":2,"alphas":["1/8","-1/16"],"betas":["1/100","1/200"]})");
}

int action_index(const Mdp& m, int state, const std::string& name) {
    const auto& acts = m.states[state].actions;
    for (std::size_t i = 0; i < acts.size(); ++i)
        if (acts[i].name == name) return (int)i;
    return -1;
}

}  // namespace

TEST_CASE("lrs parse / serialize roundtrip and iteration") {
    Lrs l = sample_lrs();
    CHECK(l.k == 2);
    Lrs back = parse_lrs(serialize_lrs(l));
    CHECK(back.alphas == l.alphas);
    CHECK(back.betas == l.betas);
    std::vector<Rat> u = l.terms(4);
    CHECK(u[0] == Rat(1, 100));
    CHECK(u[1] == Rat(1, 200));
    CHECK(u[2] == Rat(1, 8) * u[1] - Rat(1, 16) * u[0]);
    CHECK(u[3] == Rat(1, 8) * u[2] - Rat(1, 16) * u[1]);
    CHECK(l.alpha_abs_sum() == Rat(3, 16));
    CHECK_THROWS_AS(parse_lrs("{}"), Error);
}

TEST_CASE("rescaling lands in the regimes and preserves signs") {
    Lrs l = sample_lrs();
    RescaleResult pe = rescale_lrs(l, RescaleRegime::Pe);
    CHECK_NOTHROW(require_regime(pe.lrs, RescaleRegime::Pe));
    RescaleResult cv = rescale_lrs(l, RescaleRegime::Cvar);
    CHECK_NOTHROW(require_regime(cv.lrs, RescaleRegime::Cvar));
    // u'_n = betaScale * lambda^{n+1} u_n keeps every sign.
    std::vector<Rat> u = l.terms(10);
    std::vector<Rat> v = pe.lrs.terms(10);
    Rat factor = pe.betaScale * pe.lambda;
    for (int n = 0; n < 10; ++n) {
        CHECK(v[n] == factor * u[n]);
        factor *= pe.lambda;
    }

    Lrs bad = l;
    bad.betas[0] = Rat(-1, 100);
    CHECK_THROWS_AS(rescale_lrs(bad, RescaleRegime::Pe), Error);
}

TEST_CASE("d-sequence reproduces the recurrence exactly (both regimes)") {
    Lrs l = sample_lrs();
    const int horizon = 14;
    RescaleResult pe = rescale_lrs(l, RescaleRegime::Pe);
    DSequence ds = gadget_d_sequence(build_pe_gadget(pe.lrs), pe.lrs, horizon);
    std::vector<Rat> u = pe.lrs.terms(horizon + 1);
    for (int n = 0; n <= horizon; ++n) CHECK(ds.d[n] == u[n]);

    RescaleResult cv = rescale_lrs(l, RescaleRegime::Cvar);
    DSequence dc = gadget_d_sequence(build_cvar_gadget(cv.lrs), cv.lrs, horizon);
    std::vector<Rat> v = cv.lrs.terms(horizon + 1);
    for (int n = 0; n <= horizon; ++n) CHECK(dc.d[n] == v[n]);

    CHECK_THROWS_AS(gadget_d_sequence(build_pe_gadget(pe.lrs), pe.lrs, 0), Error);
}

TEST_CASE("thresholds: frequency instance scales the expectation one") {
    Lrs l = sample_lrs();
    ThresholdReport tp = threshold_pe(l);
    ThresholdReport tw = threshold_wlf(l);
    CHECK(tp.theta == tp.seriesValue);
    CHECK(tw.divisor == Rat(4) + Rat(2) / (Rat(1) - tw.rescaled.alpha_abs_sum()));
    CHECK(tw.theta * tw.divisor == tp.theta);
    CHECK(validate_mdp(tp.gadget).empty());
    CHECK(validate_mdp(tw.gadget).empty());
}

TEST_CASE("threshold with no recurrence coupling has a closed value") {
    // With all alphas zero the descent never recurses: from level l the walk
    // exits to goal immediately with weight l, so the series is
    // sum_l l 2^{-l} = 2.
    Lrs z;
    z.k = 2;
    z.alphas = {Rat(0), Rat(0)};
    z.betas = {Rat(1, 1000), Rat(1, 2000)};
    CHECK(threshold_pe(z).theta == 2);
}

TEST_CASE("quantile threshold instance carries the coin prefix") {
    Lrs l = sample_lrs();
    ThresholdReport tc = threshold_cvar(l);
    CHECK(tc.theta == Rat(2, 3) * tc.seriesValue);
    REQUIRE(tc.prefixed.has_value());
    CHECK(validate_mdp(*tc.prefixed).empty());
    CHECK(tc.prefixed->states[tc.prefixed->initial].id == "pinit");
}

TEST_CASE("positivity scan") {
    Lrs osc;
    osc.k = 2;
    osc.alphas = {Rat(1), Rat(-1)};
    osc.betas = {Rat(0), Rat(1)};
    // 0, 1, 1, 0, -1, ...
    auto hit = positivity_bruteforce(osc, default_horizon(osc));
    REQUIRE(hit.has_value());
    CHECK(*hit == 4);

    Lrs pos;
    pos.k = 2;
    pos.alphas = {Rat(1, 2), Rat(1, 4)};
    pos.betas = {Rat(1), Rat(1)};
    CHECK(!positivity_bruteforce(pos, default_horizon(pos)).has_value());
}

TEST_CASE("fixed automaton matches the hand corpus") {
    Nfa a = build_nfa_A();
    auto accepts = [&](std::vector<std::set<std::string>> w) { return a.accepts_word(w); };
    CHECK(accepts({{"p"}, {}, {"g"}}));
    CHECK(!accepts({{"n"}, {}, {"g"}}));
    CHECK(accepts({{"z"}, {"g", "c"}}));
    CHECK(!accepts({{"z"}, {"g"}}));
    CHECK(accepts({{"n"}, {"f", "c"}}));
    CHECK(!accepts({{"n"}, {"f"}}));
    CHECK(accepts({{"p"}, {"f", "c"}}));
    CHECK(!accepts({{"p"}, {"f"}}));
    CHECK(accepts({{"g", "p"}}));
    CHECK(!accepts({{"g", "z"}}));
    CHECK(accepts({{"g", "z", "c"}}));
    CHECK(accepts({{"f", "c"}}));
}

TEST_CASE("labeled long-run probability instance builds and bridges") {
    Lrs l = sample_lrs();
    RescaleResult rr = rescale_lrs(l, RescaleRegime::Pe);
    Mdp k = build_wlf_gadget(rr.lrs);
    LrpInstance li = build_lrp_instance(rr.lrs);
    CHECK(validate_mdp(li.mdp).empty());
    CHECK(li.chainStates > 0);

    // For any scheduler, the automaton's long-run probability equals
    // 1/2 + 1/2 * the weighted long-run frequency of the labeled instance.
    for (int variant = 0; variant < 3; ++variant) {
        MemorylessPolicy pk(k.num_states());
        for (int& c : pk.choice) c = 0;
        const char* cs = variant == 1 ? "sigma" : "tau";
        std::string ts = variant == 0 ? "gamma0" : (variant == 2 ? "gamma1" : "gamma");
        std::string ss = variant == 0 ? "delta" : "delta0";
        pk.choice[k.state_index("c")] = action_index(k, k.state_index("c"), cs);
        pk.choice[k.state_index("t")] = action_index(k, k.state_index("t"), ts);
        pk.choice[k.state_index("s")] = action_index(k, k.state_index("s"), ss);
        MemorylessPolicy pl(li.mdp.num_states());
        for (int& c : pl.choice) c = 0;
        for (int v = 0; v < k.num_states(); ++v) {
            pl.choice[li.mdp.state_index(k.states[v].id)] = pk.choice[v];
            int copy = li.mdp.find_state(k.states[v].id + "_c");
            if (copy >= 0) pl.choice[copy] = pk.choice[v];
        }
        Rat wlf = evaluate_fm_wlf(li.mdp, li.spec, pl);
        Rat lp = evaluate_fm_lrp_nfa(li.mdp, li.nfa, pl);
        CHECK(lp == Rat(1, 2) + wlf / 2);
    }
}

TEST_CASE("threshold reductions on a coin model") {
    Mdp a;
    int s0 = a.add_state("s0");
    int go = a.add_state("go");
    int fa = a.add_state("fa");
    a.goal = {go};
    a.fail = {fa};
    a.make_absorbing(go);
    a.make_absorbing(fa);
    a.initial = s0;
    Action& act = a.add_action(s0, "m", 2);
    act.branches.push_back(Transition{go, Rat(1, 2)});
    act.branches.push_back(Transition{fa, Rat(1, 2)});

    PeCeReduction ce = reduce_pe_to_ce(a, Rat(3, 2));
    CHECK(ce.scale == 2);
    CHECK(ce.thresholdScaled == 3);
    CHECK(validate_mdp(ce.mdp).empty());

    auto [pe, par] = reduce_ce_to_pe_acyclic(a, Rat(3, 2));
    CHECK(validate_mdp(pe).empty());
    CHECK(par.p * Rat(par.w) == par.delta / 2);
    CHECK(par.p * par.R == par.theta);
    CHECK(par.thrGeq == par.theta + par.delta);
    CHECK(par.thrGt == par.theta + par.delta / 2);
    CHECK(par.thrMin == par.theta - par.delta / 2);

    auto [wlf, thetaPrime] = reduce_pe_to_wlf_acyclic(a, Rat(3, 2));
    CHECK(validate_mdp(wlf).empty());
    CHECK(thetaPrime < Rat(3, 2));
    CHECK(Rat(3, 2) / thetaPrime == rat_ceil(Rat(3, 2) / thetaPrime));  // integer length + 1
}
