#pragma once

#include <optional>
#include <set>
#include <vector>

#include "mdpsat/mdp.hpp"
#include "mdpsat/scheduler.hpp"

namespace mdpsat {

// Maximal end component: states with the action indices retained inside it.
struct Mec {
    std::vector<int> states;                 // sorted
    std::vector<std::vector<int>> actions;   // retained action indices, parallel to states
    bool containsGoal = false;
    bool containsFail = false;
    bool positiveWeight = false;  // some retained action has weight > 0

    bool has_state(int s) const;
};

struct MecDecomposition {
    std::vector<Mec> mecs;
    std::vector<int> mecOf;  // state -> MEC index or -1
};

MecDecomposition mec_decompose(const Mdp& m);

// Exact maximal reachability data for Pr^max(not-avoid Until target).
struct ReachMaxData {
    std::vector<Rat> pmax;                     // per state
    std::vector<std::vector<Rat>> pmaxAction;  // per state, per action (1 on target, 0 on avoid)
    std::vector<std::set<int>> actMax;         // argmax action sets
    Rat gapDelta;                              // min positive gap pmax - pmaxAction, 1 if none
    MemorylessPolicy witness;                  // attains pmax from every state
};

ReachMaxData max_reach_prob(const Mdp& m, const std::set<int>& target,
                            const std::set<int>& avoid);

// Exact minimal reachability probabilities Pr^min(eventually target).
std::vector<Rat> min_reach_prob(const Mdp& m, const std::set<int>& target);

// Scheduler restriction for expected hitting times: after `copies` consecutive
// visits to states in `freeStates`, the scheduler must follow `forced`.
struct StepDiscipline {
    std::set<int> freeStates;
    MemorylessPolicy forced;
    int copies = 0;
};

// Exact minimal expected number of steps from `from` until first reaching
// `to`, over schedulers reaching it almost surely (optionally disciplined).
// Throws Error("TargetNotAlmostSurelyReachable") when no admissible scheduler
// reaches `to` almost surely.
Rat min_expected_steps(const Mdp& m, int from, int to,
                       const std::optional<StepDiscipline>& discipline = std::nullopt);

// States from which some scheduler reaches `target` with probability 1.
std::vector<int> prob1_max(const Mdp& m, const std::set<int>& target);

// Same fixpoint, plus an attractor policy reaching the target almost surely
// from every state of the set while staying inside it.
struct Prob1Attractor {
    std::vector<char> inP1;
    MemorylessPolicy attractor;
};
Prob1Attractor prob1_max_attractor(const Mdp& m, const std::set<int>& target);

// Normal form for expected-accumulated-weight solvers: all goal states merged
// into one absorbing state "goal" (the output's unique end component),
// zero-weight end components collapsed to a representative keeping only their
// leaving actions. Requires non-negative weights.
// Errors: UnboundedExpectation (positive-weight non-goal end component),
// GoalUnreachable (some state cannot reach goal), NegativeWeight.
Mdp sspp_preprocess(const Mdp& m);

struct AcyclicResult {
    bool acyclic = false;
    std::vector<int> order;  // topological order over non-trap states
    std::vector<int> cycle;  // a concrete cycle of non-trap states when not acyclic
};

// Checks whether the subgraph induced by the non-goal, non-fail states is
// acyclic; returns a topological order or a concrete cycle.
AcyclicResult acyclic_check(const Mdp& m);

// Constants of the weight cap for the long-run frequency product.
struct SaturationData {
    Int W;        // maximal action weight
    Rat delta;    // minimal positive reachability gap (1 when no gap exists)
    Rat e;        // max over s,t in Goal∪Fail of disciplined expected steps t -> s
    Int K;        // ceil(max(W·e/delta, W·(|S'|+1)))
    int sPrime;   // |S'|
};

// Computes W, delta, e and K = ceil(max(W·e/delta, W·(|S'|+1))) for a
// strongly connected MDP with non-negative weights, where S' is the
// complement of goalSet ∪ failSet. Pairs (t, s) whose disciplined hitting
// time is infinite are skipped (they cannot occur in a segment).
SaturationData wlf_saturation_point(const Mdp& m, const std::set<int>& goalSet,
                                    const std::set<int>& failSet);

}  // namespace mdpsat
