#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "mdpsat/cvar.hpp"
#include "mdpsat/longrun.hpp"
#include "mdpsat/mdp.hpp"
#include "mdpsat/rat.hpp"
#include "mdpsat/scheduler.hpp"

namespace mdpsat {

// Brute-force ground truth: exhaustive scheduler enumeration plus exact
// induced-chain evaluation, sharing no solver code beyond the model types,
// chain plumbing, and the linear solver.

struct SchedulerSpace {
    enum class Kind {
        AcyclicHistory,  // full history dependence; finite only on acyclic models
        Memoryless,      // one action per state
        WeightMemory,    // one action per (state, tracked weight <= cap)
    };
    Kind kind = Kind::Memoryless;
    // WeightMemory parameters, with WeightMemoryScheduler mode semantics.
    Int cap = 0;
    bool resetOnGoalFail = false;
    bool segmentMode = false;
};

// One deterministic member of a space, with its induced chain prebuilt on
// the enumeration's model.
struct SchedulerInstance {
    InducedChain chain;
    MemorylessPolicy policy;      // AcyclicHistory / Memoryless kinds
    WeightMemoryScheduler sched;  // WeightMemory kind
    std::map<std::string, std::string> choices;  // decision point -> action name
};

struct SchedulerEnumeration {
    SchedulerSpace space;
    Mdp model;            // the input, or its history-tree unfolding
    bool onTree = false;  // true when `model` is the unfolding
    Int count = 0;        // closed-form product of action counts over decision points
    std::vector<SchedulerInstance> members;
};

// Number of members without materializing them (the product of action-set
// sizes over the space's decision points). Errors: SpaceInfinite.
Int enumeration_count(const Mdp& m, const SchedulerSpace& space);

// Every deterministic member of the space exactly once.
// Errors: SpaceInfinite (AcyclicHistory on a cyclic model, or uncapped
// WeightMemory).
SchedulerEnumeration enumerate_schedulers(const Mdp& m, const SchedulerSpace& space);

// Exact law of the accumulated weight at goal absorption on an induced
// chain. Errors: GoalNotAlmostSure (some run misses goal), InfiniteSupport
// (the reachable (node, weight) space exceeds the internal bound).
TerminalDist terminal_law(const Mdp& model, const InducedChain& chain);

// Per-chain exact evaluations.
struct ChainValues {
    Rat goalProb;  // probability of eventually reaching goal
    Rat pe;        // expected accumulated weight, counted on goal runs only
};
ChainValues chain_values(const Mdp& model, const InducedChain& chain);

// Weighted long-run frequency of one chain: per recurrent class, the
// steady-state average of step weight times Pr(not Fail until Goal), mixed
// by the absorption probabilities. Classes avoiding Goal and Fail count 0.
Rat chain_wlf_value(const LongRunSpec& spec, const InducedChain& chain);

struct BruteResult {
    Rat value;
    int witnessIndex = -1;                       // into the enumeration's members
    std::map<std::string, std::string> choices;  // of the witness
    Int spaceSize = 0;
};

// Exact optimum over the enumerated space.
BruteResult brute_pe(const Mdp& m, const SchedulerSpace& space, bool maximize);
// Schedulers with goal probability zero are excluded from the optimum;
// Errors: GoalProbabilityZero (every member misses goal entirely).
BruteResult brute_ce(const Mdp& m, const SchedulerSpace& space, bool maximize);
// Maximal CVaR_p of the terminal law (low outcomes bad); every member must
// reach goal almost surely with finite support.
BruteResult brute_cvar(const Mdp& m, const SchedulerSpace& space, const Rat& p);
BruteResult brute_wlf(const Mdp& m, const LongRunSpec& spec, const SchedulerSpace& space);

// ---- Seeded random corpus ----

// MDPSAT_SEED when set (decimal), else a fixed default.
unsigned long corpus_seed();

struct CorpusOptions {
    int maxStates = 5;   // including the goal and fail traps
    int maxActions = 2;
    int maxWeight = 3;
    bool acyclic = false;   // restrict interior edges to go forward
    bool withFail = true;   // include a fail trap
};

// Small random model with a goal trap (and optionally a fail trap):
// probabilities drawn from {1, 1/2-1/2, 1/4-3/4, 1/2-1/4-1/4} patterns,
// rejection-sampled until every state is reachable.
Mdp random_model(std::mt19937_64& rng, const CorpusOptions& opt);

// Strongly connected model (a ring edge is forced in every state's first
// action) without traps; callers pick the Goal/Fail state sets.
Mdp random_strongly_connected(std::mt19937_64& rng, int maxStates, int maxActions,
                              int maxWeight);

// Random finite rational distribution with `atoms` support points.
TerminalDist random_dist(std::mt19937_64& rng, int atoms, int maxAbsWeight);

}  // namespace mdpsat
