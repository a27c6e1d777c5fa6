#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "mdpsat/rat.hpp"

namespace mdpsat {

// Weighted, labeled MDP: the universe every solver consumes.
// Transition probabilities are exact rationals, action weights are integers
// (arbitrary sign at the model level; individual solvers check the sign
// regime they need).

struct Transition {
    int to = 0;  // state index
    Rat prob;
};

struct Action {
    std::string name;
    Int weight = 0;
    std::vector<Transition> branches;
};

struct State {
    std::string id;
    std::vector<std::string> labels;  // atomic propositions, sorted unique
    std::vector<Action> actions;
};

struct Mdp {
    std::vector<State> states;
    int initial = 0;
    std::set<int> goal;  // state indices
    std::set<int> fail;

    int num_states() const { return static_cast<int>(states.size()); }
    bool is_goal(int s) const { return goal.count(s) > 0; }
    bool is_fail(int s) const { return fail.count(s) > 0; }
    bool is_trap(int s) const { return is_goal(s) || is_fail(s); }

    // Index of a state id; throws Error("UnknownStateReference") when absent.
    int state_index(const std::string& id) const;
    // -1 when absent.
    int find_state(const std::string& id) const;

    // Convenience constructors used throughout solvers and tests.
    int add_state(const std::string& id, std::vector<std::string> labels = {});
    Action& add_action(int state, const std::string& name, Int weight);
    // Makes `state` absorbing: one zero-weight self loop.
    void make_absorbing(int state);

    // Largest absolute action weight (0 for the empty MDP).
    Int max_abs_weight() const;
    // True iff all action weights are >= 0.
    bool weights_nonnegative() const;
};

// Parses the bit-exact JSON schema (see README / serialize_mdp).
// Errors: MalformedDocument, ProbabilitySumNotOne, UnknownStateReference,
// UnreachableState.
Mdp parse_mdp(const std::string& document);

// Canonical serialization; parse_mdp(serialize_mdp(m)) == m structurally.
std::string serialize_mdp(const Mdp& m);

// Returns diagnostics (empty iff all invariants hold). Never throws.
std::vector<std::string> validate_mdp(const Mdp& m);

// States reachable from the initial state (any action).
std::vector<int> reachable_states(const Mdp& m);

bool mdp_equal(const Mdp& a, const Mdp& b);

}  // namespace mdpsat
