#pragma once

#include "mdpsat/graph.hpp"
#include "mdpsat/mdp.hpp"
#include "mdpsat/scheduler.hpp"

namespace mdpsat {

// Classical stochastic shortest path: optimal expected accumulated weight
// among schedulers, on models whose unique end component is the absorbing
// goal (see sspp_preprocess), so every scheduler reaches goal almost surely.
struct SsppResult {
    Rat value;                // at the initial state
    std::vector<Rat> values;  // per state
    MemorylessPolicy witness;
    bool maximize = true;
};

SsppResult classical_sspp(const Mdp& m, bool maximize);

// Partial expectation PE (weight counted only on goal-reaching paths) and
// conditional expectation CE = PE / Pr(reach goal).
struct PartialResult {
    Rat value;
    WeightMemoryScheduler witness;  // keyed by (state, accumulated weight)
    std::string kind;               // "PE" or "CE"
    bool maximize = true;
};

// Exact optimal partial expectation on an acyclic MDP (weights may be any
// integers) by backward induction over (state, accumulated weight).
PartialResult acyclic_partial_expectation(const Mdp& m, bool maximize);

// Exact optimal conditional expectation on an acyclic MDP via the convex
// Pareto frontier of achievable (reach probability, partial expectation)
// pairs. Errors: NotAcyclic, GoalUnreachable.
PartialResult acyclic_conditional_expectation(const Mdp& m, bool maximize);

// Per-scheduler evaluation on the induced chain.
Rat chain_goal_prob(const Mdp& m, const InducedChain& chain);
Rat chain_partial_expectation(const Mdp& m, const InducedChain& chain);

Rat evaluate_pe(const Mdp& m, const WeightMemoryScheduler& s);
Rat evaluate_pe(const Mdp& m, const MemorylessPolicy& s);
// Errors: GoalProbabilityZero.
Rat evaluate_ce(const Mdp& m, const WeightMemoryScheduler& s);
Rat evaluate_ce(const Mdp& m, const MemorylessPolicy& s);

}  // namespace mdpsat
