#include "mdpsat/cvar.hpp"

#include <set>

#include "mdpsat/graph.hpp"
#include "mdpsat/matrix.hpp"
#include "mdpsat/sspp.hpp"

namespace mdpsat {

namespace {

Rat var_core(const std::map<Rat, Rat>& atoms, const Rat& p) {
    if (atoms.empty()) throw Error("MalformedDocument", "empty distribution");
    Rat cum(0);
    for (const auto& [x, pr] : atoms) {
        cum += pr;
        if (cum > p) return x;
    }
    return atoms.rbegin()->first;  // p covers the whole law (e.g. p = 1)
}

Rat cvar_core(const std::map<Rat, Rat>& atoms, const Rat& p) {
    if (p <= 0 || p > 1) throw Error("MalformedDocument", "p must be in (0, 1]");
    Rat v = var_core(atoms, p);
    // (1/p) * (E(X ; X < v) + (p - Pr(X < v)) * v); the strictly-below mass
    // never exceeds p by the choice of v, so no conditional is ever formed.
    Rat lowPr(0), lowE(0);
    for (const auto& [x, pr] : atoms) {
        if (!(x < v)) break;
        lowPr += pr;
        lowE += x * pr;
    }
    return (lowE + (p - lowPr) * v) / p;
}

Rat rat_pow(const Rat& base, Int exp) {
    Rat result(1), b = base;
    while (exp > 0) {
        if (mpz_odd_p(exp.get_mpz_t())) result *= b;
        exp >>= 1;
        if (exp > 0) b *= b;
    }
    return result;
}

void require_normal_form(const Mdp& m) {
    MecDecomposition d = mec_decompose(m);
    for (const Mec& mec : d.mecs)
        if (mec.states.size() != 1 || !m.is_goal(mec.states[0]))
            throw Error("PreprocessNotApplied", "model has a non-goal end component");
}

}  // namespace

Int var_of_dist(const TerminalDist& d, const Rat& p) {
    std::map<Rat, Rat> atoms;
    for (const auto& [x, pr] : d.atoms) atoms[Rat(x)] = pr;
    Rat v = var_core(atoms, p);
    return v.get_num();  // denominators are 1 by construction
}

Rat cvar_of_dist(const TerminalDist& d, const Rat& p) {
    std::map<Rat, Rat> atoms;
    for (const auto& [x, pr] : d.atoms) atoms[Rat(x)] = pr;
    return cvar_core(atoms, p);
}

Rat var_of_dist(const std::map<Rat, Rat>& atoms, const Rat& p) { return var_core(atoms, p); }
Rat cvar_of_dist(const std::map<Rat, Rat>& atoms, const Rat& p) { return cvar_core(atoms, p); }

CvarSaturation cvar_saturation(const Mdp& m, const Rat& p) {
    if (p <= 0 || p >= 1) throw Error("MalformedDocument", "p must be in (0, 1)");
    if (!m.weights_nonnegative()) throw Error("NegativeWeight", "weights must be non-negative");
    require_normal_form(m);
    CvarSaturation sat;
    sat.N = m.num_states();
    sat.deltaMin = 1;
    sat.W = 0;
    for (const State& s : m.states)
        for (const Action& a : s.actions) {
            if (a.weight > sat.W) sat.W = a.weight;
            for (const Transition& t : a.branches)
                if (t.prob < sat.deltaMin) sat.deltaMin = t.prob;
        }
    sat.tailBound = Rat(1) - p;
    // Pr(goal not reached within N steps) <= 1 - deltaMin^N from any state, so
    // ell blocks of N steps push the tail below 1 - p.
    Rat base = Rat(1) - rat_pow(sat.deltaMin, sat.N);
    if (base == 0 || base <= sat.tailBound) {
        sat.ell = 1;
    } else {
        Int hi = 1;
        while (rat_pow(base, hi) > sat.tailBound) hi *= 2;
        Int lo = hi / 2;  // pow(base, lo) > tail, pow(base, hi) <= tail
        while (hi - lo > 1) {
            Int mid = (lo + hi) / 2;
            (rat_pow(base, mid) > sat.tailBound ? lo : hi) = mid;
        }
        sat.ell = hi;
    }
    sat.K = sat.ell * sat.N * sat.W;
    return sat;
}

std::map<int, Rat> cvar_terminal_values(const Mdp& m, const Unfolding& u, bool highBad) {
    std::map<int, Rat> values;
    if (!highBad) {
        for (const auto& [node, w] : u.terminalWeight) values[node] = Rat(w);
        return values;
    }
    // Negated scale. Saturated states receive the best continuation
    // -K - E^min(s): beyond the cap every remaining outcome lies inside the
    // averaged tail, where only the expectation matters and the maximizing
    // scheduler follows the minimal expected remaining weight.
    SsppResult emin = classical_sspp(m, false);
    for (const auto& [node, state] : u.goalTerminals)
        values[node] = -Rat(u.terminalWeight.at(node));
    for (const auto& [node, state] : u.saturatedTerminals)
        values[node] = -Rat(u.terminalWeight.at(node)) - emin.values[state];
    return values;
}

TerminalRewardResult expected_terminal_optimum(const Mdp& m, const std::map<int, Rat>& reward,
                                               bool maximize) {
    const int n = m.num_states();
    std::vector<int> solveSet, pos(n, -1);
    std::vector<Rat> x(n, Rat(0));
    for (int s = 0; s < n; ++s) {
        auto it = reward.find(s);
        if (it != reward.end())
            x[s] = it->second;
        else {
            pos[s] = static_cast<int>(solveSet.size());
            solveSet.push_back(s);
        }
    }
    MemorylessPolicy policy(n);
    for (int s : solveSet) policy.choice[s] = 0;
    const std::size_t k = solveSet.size();
    while (true) {
        if (k > 0) {
            RatMatrix a = RatMatrix::identity(k), b(k, 1);
            for (std::size_t i = 0; i < k; ++i) {
                const Action& act = m.states[solveSet[i]].actions[policy.choice[solveSet[i]]];
                for (const Transition& t : act.branches) {
                    if (pos[t.to] >= 0)
                        a.at(i, pos[t.to]) -= t.prob;
                    else
                        b.at(i, 0) += t.prob * x[t.to];
                }
            }
            RatMatrix sol = a.solve(b);
            for (std::size_t i = 0; i < k; ++i) x[solveSet[i]] = sol.at(i, 0);
        }
        bool improved = false;
        for (int s : solveSet) {
            for (std::size_t a = 0; a < m.states[s].actions.size(); ++a) {
                Rat q(0);
                for (const Transition& t : m.states[s].actions[a].branches) q += t.prob * x[t.to];
                if (maximize ? q > x[s] : q < x[s]) {
                    policy.choice[s] = static_cast<int>(a);
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) break;
    }
    return TerminalRewardResult{x[m.initial], x, policy};
}

namespace {

CvarResult solve_cvar(const Mdp& m, const Rat& p, bool highBad) {
    if (p <= 0 || p >= 1) throw Error("MalformedDocument", "p must be in (0, 1)");
    if (!m.weights_nonnegative()) throw Error("NegativeWeight", "weights must be non-negative");
    require_normal_form(m);
    CvarResult result;
    result.highBad = highBad;
    // High-bad works on the negated scale; the tail collapsed at the cap must
    // then lie outside the p worst outcomes, so the tail target is p = 1 - (1-p).
    result.saturation = cvar_saturation(m, highBad ? Rat(1) - p : p);
    Unfolding u = weight_unfold(m, result.saturation.K);
    std::map<int, Rat> terminal = cvar_terminal_values(m, u, highBad);
    // Per scheduler the dual optimum v + (1/p) E(min(X - v, 0)) sits at a
    // quantile of its own law, so the distinct terminal values exhaust the
    // useful candidates.
    std::set<Rat> candidates;
    for (const auto& [node, r] : terminal) candidates.insert(r);
    bool first = true;
    Rat bestF, bestV;
    MemorylessPolicy bestPolicy;
    for (const Rat& v : candidates) {
        std::map<int, Rat> reward;
        for (const auto& [node, r] : terminal) reward[node] = r < v ? r - v : Rat(0);
        TerminalRewardResult inner = expected_terminal_optimum(u.mdp, reward, true);
        Rat f = v + inner.value / p;
        if (first || f > bestF) {
            bestF = f;
            bestV = v;
            bestPolicy = inner.witness;
            first = false;
        }
    }
    result.value = highBad ? -bestF : bestF;
    result.var = highBad ? -bestV : bestV;
    result.witness.cap = result.saturation.K;
    for (int node = 0; node < u.mdp.num_states(); ++node)
        if (!terminal.count(node))
            result.witness.choice[u.info[node]] = bestPolicy.choice[node];
    return result;
}

}  // namespace

CvarResult cvar_max(const Mdp& m, const CvarQuery& q) {
    return q.highBad ? solve_cvar(m, q.p, true) : solve_cvar(m, q.p, false);
}

CvarResult cvar_max_high_bad(const Mdp& m, const CvarQuery& q) { return solve_cvar(m, q.p, true); }

}  // namespace mdpsat
