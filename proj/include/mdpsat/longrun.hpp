#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "mdpsat/graph.hpp"
#include "mdpsat/mdp.hpp"
#include "mdpsat/nfa.hpp"
#include "mdpsat/scheduler.hpp"

namespace mdpsat {

// Weighted long-run frequency: the long-run average of wgt(step) * 1(the
// suffix from this step satisfies "not Fail until Goal"), for two disjoint
// state sets Goal and Fail that every end component must intersect.
struct LongRunSpec {
    std::set<int> goalSet;
    std::set<int> failSet;
};

// Mean-payoff MDP with exact rational per-action expected rewards.
struct MeanPayoffMdp {
    struct MpAction {
        Rat reward;
        std::vector<std::pair<int, Rat>> branches;
    };
    struct MpState {
        std::vector<MpAction> actions;
    };
    std::vector<MpState> states;
    int initial = 0;
};

struct MeanPayoffResult {
    Rat gain;                // at the initial state
    std::vector<Rat> gains;  // per state
    std::vector<Rat> bias;
    MemorylessPolicy witness;
};

// Exact maximal long-run average reward via multichain gain/bias policy
// iteration (gain improvement first, then bias improvement among
// gain-conserving actions, lowest index, keep incumbent unless strict).
MeanPayoffResult mean_payoff_max(const MeanPayoffMdp& m);

// Product over (state, w) where w is the accumulated weight of the current
// segment (the steps since the last Goal∪Fail visit), capped at K. Counted
// weight is granted as deferred reward on the transition entering Goal; at
// the cap only reachability-optimal actions remain enabled and the surplus
// above K is granted per step as weight * Pr^max(segment resolves to Goal).
struct FmkProduct {
    MeanPayoffMdp mp;
    std::vector<std::pair<int, Int>> info;      // node -> (state, segment weight)
    std::vector<char> isGF;                     // node's state is in Goal ∪ Fail
    std::vector<char> saturated;                // node outside Goal∪Fail at w = K
    std::vector<std::vector<int>> origAction;   // node, product action -> model action
    ReachMaxData reach;                         // Pr^max(not Fail until Goal) data
    Int K;
};

// Errors: NegativeWeight, SpecMecViolation, MalformedDocument (overlapping sets).
FmkProduct fmk_product(const Mdp& m, const LongRunSpec& spec, const Int& K);

struct WlfResult {
    Rat value;
    WeightMemoryScheduler witness;  // cap K, segment-reset semantics
    SaturationData saturation;      // of the end component the value rests on
    std::map<int, Rat> gainPerMec;  // end component index -> optimal gain
};

// Maximal weighted long-run frequency over weight-memory schedulers that
// switch to a reachability-optimal policy once the segment weight exceeds the
// saturation point K: per end component, saturation point + product + exact
// mean-payoff optimization; across end components, the best almost-surely
// attainable mixture. Errors: NegativeWeight, SpecMecViolation.
WlfResult wlf_max(const Mdp& m, const LongRunSpec& spec);

// Exact per-scheduler weighted long-run frequency on the induced chain:
// sum over recurrent nodes of wgt * Pr(not Fail until Goal) * steady-state.
// Errors: MultipleBsccs, BsccAvoidsGoalFail.
Rat evaluate_fm_wlf(const Mdp& m, const LongRunSpec& spec, const WeightMemoryScheduler& s);
Rat evaluate_fm_wlf(const Mdp& m, const LongRunSpec& spec, const MemorylessPolicy& s);

// Exact per-scheduler long-run probability that the label trace from each
// step has a good prefix accepted by the automaton: steady states times
// per-node acceptance probabilities from the chain x subset-automaton
// product. Errors: MultipleBsccs, AcceptanceUnresolved.
Rat evaluate_fm_lrp_nfa(const Mdp& m, const Nfa& a, const WeightMemoryScheduler& s);
Rat evaluate_fm_lrp_nfa(const Mdp& m, const Nfa& a, const MemorylessPolicy& s);

// Long-run frequency query for the qualitative check: does some scheduler
// make the long-run frequency of suffixes satisfying "a until b" exceed
// theta with probability one?
struct FreqQuery {
    Rat theta;
    std::string a, b;  // atomic propositions of the until body
};

struct FltlReport {
    bool holds = false;
    std::map<int, Rat> perMecGain;
};

// Unit weights, Goal = b-states, Fail = (not a and not b)-states; true iff
// the union of end components whose optimal gain exceeds theta is reachable
// with probability one.
FltlReport fltl_qualitative(const Mdp& m, const FreqQuery& q);

}  // namespace mdpsat
