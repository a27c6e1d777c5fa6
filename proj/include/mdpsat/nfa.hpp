#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "mdpsat/rat.hpp"

namespace mdpsat {

// Boolean guard over atomic propositions: names combined with & | ! and
// parentheses; evaluated against a state's label set.
struct GuardExpr {
    enum class Kind { Var, Not, And, Or };
    Kind kind = Kind::Var;
    std::string name;  // Kind::Var
    std::shared_ptr<GuardExpr> lhs, rhs;
};

GuardExpr parse_guard(const std::string& text);
bool guard_eval(const GuardExpr& g, const std::set<std::string>& labels);

// Nondeterministic finite automaton accepting "good prefixes": a run is
// accepted as soon as some sequence of guard-satisfying transitions can
// reach an accepting state.
struct Nfa {
    struct Transition {
        int from = 0;
        std::string guard;
        GuardExpr compiled;
        int to = 0;
    };
    std::vector<std::string> states;
    int initial = 0;
    std::set<int> accepting;
    std::vector<Transition> transitions;

    int state_index(const std::string& id) const;
    void add_transition(const std::string& from, const std::string& guard, const std::string& to);

    // Successor state set after reading one letter from `current`.
    std::set<int> step(const std::set<int>& current, const std::set<std::string>& letter) const;
    bool accepts_set(const std::set<int>& set) const;
    // True iff some prefix of the word is accepted (word read in full).
    bool accepts_word(const std::vector<std::set<std::string>>& word) const;
};

Nfa parse_nfa(const std::string& document);
std::string serialize_nfa(const Nfa& a);

}  // namespace mdpsat
