#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mdpsat/longrun.hpp"
#include "mdpsat/matrix.hpp"
#include "mdpsat/mdp.hpp"
#include "mdpsat/nfa.hpp"
#include "mdpsat/rat.hpp"
#include "mdpsat/scheduler.hpp"

namespace mdpsat {

// Linear recurrence sequence u_{n+k} = alpha_1 u_{n+k-1} + ... + alpha_k u_n
// with initial values u_j = beta_j for 0 <= j < k.
struct Lrs {
    int k = 0;
    std::vector<Rat> alphas;  // alpha_1 .. alpha_k
    std::vector<Rat> betas;   // beta_0 .. beta_{k-1}

    // u_0 .. u_{count-1} by exact iteration.
    std::vector<Rat> terms(int count) const;
    // Sum of |alpha_i|.
    Rat alpha_abs_sum() const;
};

// JSON schema: {"k":2,"alphas":["1/8","-1/16"],"betas":["1/100","1/200"]}.
Lrs parse_lrs(const std::string& document);
std::string serialize_lrs(const Lrs& l);

// Coefficient regimes small enough for the encodings to be probabilities:
//   Pe:   sum |alpha_i| < 1/4          and 0 <= beta_j < 1/(4 k^{2k+2})
//   Cvar: sum |alpha_i| <= 1/(5(k+1))  and 0 <= beta_j <= (sum |alpha_i|)/3
// The weighted long-run frequency instance reuses the Pe regime.
enum class RescaleRegime { Pe, Cvar };

struct RescaleResult {
    Lrs lrs;     // alpha_i -> lambda^i alpha_i, beta_j -> scale * lambda^{j+1} beta_j
    Rat lambda;  // per-index damping factor, a power of 1/2 times 1/(mu 4k^{2k+2})
    Rat mu;      // max |coefficient| of the input
    Rat betaScale;  // extra uniform beta factor (Cvar regime only, else 1)
};

// Shrinks the coefficients into the requested regime while preserving the
// sign of every u_n (u'_n = betaScale * lambda^{n+1} u_n). Errors:
// NegativeInitialValue (some beta_j < 0), RescaleConstraintViolated (Cvar
// regime with all alpha zero but some beta positive).
RescaleResult rescale_lrs(const Lrs& l, RescaleRegime regime);

// Throws RescaleConstraintViolated unless l satisfies the regime bounds.
void require_regime(const Lrs& l, RescaleRegime regime);

// Recurrence-relation component: states t, s, t_1..t_k, s_1..s_k, goal.
// Action gamma at t (weight 0) moves to t_i with probability alpha_i when
// alpha_i > 0, to s_i with probability |alpha_i| when alpha_i < 0, and to
// goal with the residual probability; t_i returns to t with weight -i.
// Action delta at s mirrors gamma with the sides swapped.
Mdp build_recurrence_core(const Lrs& l);

// Full partial-expectation instance: recurrence core + per-level entry
// actions gamma_j/delta_j (weight k-j) into one-shot states x_j/y_j that hit
// goal with probability 1/(2 k^{2(k-j)}) + beta_j (x side) or without the
// beta_j bonus (y side), + the initial component (s_init self-loop of weight
// +1, coin state c choosing between t and s). Requires the Pe regime.
Mdp build_pe_gadget(const Lrs& l);

// Expectation-of-nonpositive-part instance: recurrence core + entry actions
// gamma_j/delta_j (weight -2k+j) splitting between a direct goal exit of
// compensating weight +3k-2j and geometric loop states that drain weight
// before reaching goal; the beta_j enter as branch probabilities beta_j/alpha
// diverting the s side into a heavier loop. Requires the Cvar regime.
Mdp build_cvar_gadget(const Lrs& l);

// Weighted long-run frequency instance: the partial-expectation instance
// with the one-shot x_j/y_j states replaced by two-step detours equalizing
// the expected segment length across actions, one zero-weight pad state on
// every transition into goal or fail, and weight-0 reset edges from goal and
// fail back to s_init. Requires the Pe regime.
Mdp build_wlf_gadget(const Lrs& l);

// Labeled long-run probability instance derived from the WLF instance:
// weights are normalized to {0, +1} by inserting unit-weight chain states
// (label p; zero-weight states carry label z), goal/fail are duplicated into
// a coin-flip pair of copies where one copy carries the extra label c, and
// the fixed co-safety NFA ties acceptance to the weight labels.
struct LrpInstance {
    Mdp mdp;          // labeled; action weights mirror the source-state labels
    LongRunSpec spec; // goal/fail copy sets
    Nfa nfa;
    int chainStates = 0;  // inserted unit-weight states
};
LrpInstance build_lrp_instance(const Lrs& l);

// The fixed 5-state good-prefix NFA over {n, z, p, c, g, f}: branch on the
// first letter's weight label, loop while neither g nor f holds, and accept
// on (g), (g&c), (f&c) according to the branch; suffixes starting at a
// goal/fail state accept immediately on g&p, g&z&c, or f&c.
Nfa build_nfa_A();

// Values of the canonical scheduler on a PE or CVaR instance, level by
// level: et[n] = e(t, base + n) is the scheduler's expectation when starting
// at t with accumulated weight base + n (base = -(k-1) for PE, -k for CVaR),
// es mirrors it at s, and d[n] = et[n] - es[n] reproduces the recurrence
// sequence. Base levels come from exact linear solves of the entry actions'
// absorption sub-chains; higher levels follow the gamma/delta recursion.
struct DSequence {
    Int baseLevel;
    std::vector<Rat> d, et, es;  // indices 0 .. horizon
};

// g must be a PE or CVaR instance built from l. Errors: HorizonNonpositive.
DSequence gadget_d_sequence(const Mdp& g, const Lrs& l, int horizon);

// Exact closed-form value of the canonical scheduler, with the series
// intermediates exposed for cross-checking against truncated sums.
struct ThresholdReport {
    Rat theta;        // the decision threshold for the instance's problem
    Rat seriesValue;  // the underlying expectation sum_l (1/2)^l e(t, l)
    Rat divisor;      // WLF: the scheduler-independent return time; else 1
    Mdp gadget;
    std::optional<Mdp> prefixed;  // CVaR: the half-quantile prefix instance
    Lrs rescaled;
    Rat lambda, mu, betaScale;
    RatMatrix A;                  // 2k x 2k inter-block descent matrix
    std::vector<Rat> a, b, c, vMinus1;
    std::map<std::string, std::string> canonical;  // scheduler rule, rendered
};

// theta = value of the canonical scheduler (tau at c, gamma/delta at
// positive weights, gamma_j/delta_j at the base levels); rescaling is
// applied internally and recorded. Errors: NegativeInitialValue,
// RescaleConstraintViolated, SingularMatrix (internal invariant).
ThresholdReport threshold_pe(const Lrs& l);
// theta = (2/3) * seriesValue, the half-quantile conditional value-at-risk
// of the prefix instance under the canonical scheduler.
ThresholdReport threshold_cvar(const Lrs& l);
// theta = theta_pe / (4 + 2/(1 - sum |alpha_i|)); the divisor is verified to
// be the expected return time under three distinct schedulers.
ThresholdReport threshold_wlf(const Lrs& l);

// Partial-expectation threshold problem -> conditional-expectation threshold
// problem: fresh initial state splitting half-half between the old initial
// state and a fresh goal, the old goal forwarding with weight +theta; weights
// are multiplied by theta's denominator to stay integral.
struct PeCeReduction {
    Mdp mdp;
    Int scale;            // all original weights were multiplied by this
    Rat thresholdScaled;  // compare CE^max against this (= scale * theta)
};
PeCeReduction reduce_pe_to_ce(const Mdp& m, const Rat& theta);

// Parameters of the conditional -> partial reduction on acyclic MDPs.
struct CePeReductionParams {
    Int m;         // product of per-state lcms of probability denominators
    Rat theta;     // working threshold (rescaled when the pre-step applied)
    Rat delta;     // 1 / (denom(theta) * m)
    Int w;         // 1 + max accumulated weight over paths into fail
    Rat p;         // delta / (2w)
    Rat R;         // 2 w theta / delta
    Rat thrGeq;    // theta + delta     (PE^max >= thrGeq)
    Rat thrGt;     // theta + delta/2   (PE^max >  thrGt)
    Rat thrMin;    // theta - delta/2   (PE^min <= thrMin, < thrMin)
    bool preGadget = false;  // fresh-initial step enforcing Pr^min(goal) > 0
    Int scale = 1;           // weight scaling applied by the pre-step
};

// Adds to fail an escape action of weight R reaching goal with the tiny
// probability p (else a fresh trap), calibrated so that strict and
// non-strict partial-expectation thresholds bracket the conditional one:
// CE^max > theta iff PE^max >= theta + delta iff PE^max > theta + delta/2,
// and dually CE^min < theta iff PE^min <= theta - delta/2. When some
// scheduler misses goal entirely, a fresh initial state with a theta-weight
// half-half split to goal restores Pr^min(goal) > 0 first.
// Errors: NotAcyclic, NegativeWeight.
std::pair<Mdp, CePeReductionParams> reduce_ce_to_pe_acyclic(const Mdp& m, const Rat& theta);

// Pads every path to goal/fail to a uniform length with zero-weight chain
// states, adds weight-0 reset edges from goal and fail to the initial state,
// and returns the rescaled threshold theta / (length + 1) such that
// WLF^max of the result compares to it exactly as PE^max of m compares to
// theta. Errors: NotAcyclic, NegativeWeight.
std::pair<Mdp, Rat> reduce_pe_to_wlf_acyclic(const Mdp& m, const Rat& theta);

// First index n <= horizon with u_n < 0, by exact iteration; nullopt means
// no counterexample within the horizon (never "all non-negative").
std::optional<int> positivity_bruteforce(const Lrs& l, int horizon);

// Default analysis horizon for d-sequences and positivity scans.
int default_horizon(const Lrs& l);

}  // namespace mdpsat
