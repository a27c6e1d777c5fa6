#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "mdpsat/mdp.hpp"

namespace mdpsat {

// Memoryless deterministic policy: one action index per state (-1 = unset).
struct MemorylessPolicy {
    std::vector<int> choice;

    explicit MemorylessPolicy(int numStates = 0) : choice(numStates, -1) {}
    int at(int state) const { return choice[state]; }
};

// Finite-memory deterministic scheduler tracking accumulated weight.
// Mode update on a transition from state s with action weight g into state t:
//   mode' = 0                      if resetOnGoalFail and t is in goal or fail
//   mode' = 0                      if segmentMode and s is in goal or fail
//                                  (the exit weight of a goal/fail state does
//                                  not open the next segment)
//   mode' = min(mode + g, cap)     otherwise (no cap when cap < 0).
// SSPP-style uses never reset (mode = total accumulated weight); long-run
// uses both flags (mode = S'-segment weight since the last Goal/Fail visit).
struct WeightMemoryScheduler {
    Int cap = -1;  // -1: uncapped
    bool resetOnGoalFail = false;
    bool segmentMode = false;
    std::map<std::pair<int, Int>, int> choice;  // (state, mode) -> action index

    Int next_mode(const Mdp& m, int source, const Int& mode, const Int& actionWeight,
                  int target) const;
    // -1 when the scheduler has no entry for (state, mode).
    int action_for(int state, const Int& mode) const;
};

// Finite Markov chain induced by an MDP and a deterministic scheduler.
// Nodes are reachable (state, mode) pairs; each node carries the chosen
// action and its weight.
struct InducedChain {
    struct Node {
        int state = 0;
        Int mode = 0;
        int action = 0;
    };
    std::vector<Node> nodes;
    std::vector<std::vector<std::pair<int, Rat>>> rows;  // successor distributions
    std::vector<Int> stepWeight;
    int initial = 0;

    int num_nodes() const { return static_cast<int>(nodes.size()); }
};

InducedChain induce_chain(const Mdp& m, const MemorylessPolicy& policy);
InducedChain induce_chain(const Mdp& m, const WeightMemoryScheduler& sched);

// Weight-level unfolding over S x {0..K} (transitions update i to
// min(i + wgt, K)). Goal-level states (goal, i) and saturated states (s, K)
// become absorbing terminals with recorded weights i and K respectively.
struct Unfolding {
    Mdp mdp;
    std::vector<std::pair<int, Int>> info;  // product index -> (state, level)
    std::map<int, Int> terminalWeight;      // absorbing product index -> recorded weight
    std::map<int, int> goalTerminals;       // product index -> original goal state
    std::map<int, int> saturatedTerminals;  // product index -> original state at level K
};

Unfolding weight_unfold(const Mdp& m, const Int& cap);

// ---- Exact analysis on chain transition rows ----
using ChainRows = std::vector<std::vector<std::pair<int, Rat>>>;

// Bottom strongly connected components.
std::vector<std::vector<int>> chain_bsccs(const ChainRows& rows);

// Pr(not-avoid Until target) per node; target wins on overlap.
std::vector<Rat> chain_until_prob(const ChainRows& rows, const std::vector<char>& target,
                                  const std::vector<char>& avoid);

// Stationary distribution supported on one BSCC (zero elsewhere).
std::vector<Rat> chain_steady_state(const ChainRows& rows, const std::vector<int>& bscc);

// Expected number of steps to reach `target` from `from`; nullopt when the
// target is not reached almost surely.
std::optional<Rat> chain_expected_steps(const ChainRows& rows, const std::vector<char>& target,
                                        int from);

}  // namespace mdpsat
