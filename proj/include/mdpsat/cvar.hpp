#pragma once

#include <map>

#include "mdpsat/mdp.hpp"
#include "mdpsat/scheduler.hpp"

namespace mdpsat {

// Finite law of the accumulated weight at goal under a scheduler.
struct TerminalDist {
    std::map<Int, Rat> atoms;  // weight -> probability, sums to 1
};

// Worst p-quantile: sup{r | Pr(X <= r) <= p}, which on a finite support is
// the least support point whose cumulative probability exceeds p (or the
// maximal support point when none does, e.g. p = 1).
Int var_of_dist(const TerminalDist& d, const Rat& p);

// Conditional value-at-risk of the p worst (lowest) outcomes:
//   CVaR_p(X) = (1/p) * (E(X ; X < v) + (p - Pr(X < v)) * v),  v = VaR_p(X).
Rat cvar_of_dist(const TerminalDist& d, const Rat& p);

// Rational-support generalizations, used by the high-outcomes-bad pipeline
// whose saturated terminal values carry rational continuation adjustments.
Rat var_of_dist(const std::map<Rat, Rat>& atoms, const Rat& p);
Rat cvar_of_dist(const std::map<Rat, Rat>& atoms, const Rat& p);

struct CvarQuery {
    Rat p;  // in (0, 1)
    bool highBad = false;
};

// Weight cap beyond which scheduler behavior cannot influence the CVaR.
struct CvarSaturation {
    int N = 0;      // number of states
    Rat deltaMin;   // minimal transition probability
    Int ell;        // smallest l with (1 - deltaMin^N)^l <= 1 - p
    Int W;          // maximal action weight
    Int K;          // ell * N * W
    Rat tailBound;  // the 1 - p (low-bad) or p (high-bad) actually used
};

// Smallest l with (1 - deltaMin^N)^l <= 1 - p, by exact rational powering
// (doubling then binary refinement), and K = l * N * W. Requires the model
// to be in expected-weight normal form (only end component is goal).
// Errors: PreprocessNotApplied, NegativeWeight.
CvarSaturation cvar_saturation(const Mdp& m, const Rat& p);

struct CvarResult {
    Rat value;
    Rat var;  // maximizing dual candidate v, on the original weight scale
    WeightMemoryScheduler witness;
    CvarSaturation saturation;
    bool highBad = false;
};

// Maximal CVaR_p of the accumulated weight at goal, via the lower-tail dual
//   CVaR_p(X) = max_v [ v + (1/p) E(min(X - v, 0)) ]
// over the capped weight unfolding: each candidate v is a plain optimal
// expected-terminal-reward solve, and the outer maximum ranges over the
// distinct terminal values (the per-scheduler optimum is always a quantile
// of its own law, hence a terminal value).
CvarResult cvar_max(const Mdp& m, const CvarQuery& q);

// High outcomes bad: weights are negated, the saturated states (s, K) receive
// the best-continuation adjustment -K - E^min(s), and the result is reported
// on the original scale.
CvarResult cvar_max_high_bad(const Mdp& m, const CvarQuery& q);

// Terminal values of the capped unfolding used by both the solver and the
// brute-force oracle: accumulated weight at goal entry and K at saturation
// (low-bad), or their negations with the -K - E^min(s) saturation adjustment
// (high-bad).
std::map<int, Rat> cvar_terminal_values(const Mdp& m, const Unfolding& u, bool highBad);

// Optimal expected terminal reward over an MDP all of whose goal states are
// absorbing and carry a reward, reaching them almost surely under every
// scheduler. Returns per-state values and an optimal memoryless policy.
struct TerminalRewardResult {
    Rat value;
    std::vector<Rat> values;
    MemorylessPolicy witness;
};
TerminalRewardResult expected_terminal_optimum(const Mdp& m,
                                               const std::map<int, Rat>& reward,
                                               bool maximize);

}  // namespace mdpsat
