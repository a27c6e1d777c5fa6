#include "mdpsat/nfa.hpp"

#include <json.hpp>

namespace mdpsat {

using nlohmann::json;

namespace {

// Recursive-descent parser, precedence ! > & > |.
struct GuardParser {
    const std::string& text;
    std::size_t pos = 0;

    explicit GuardParser(const std::string& t) : text(t) {}

    void skip() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    }
    bool eat(char c) {
        skip();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    GuardExpr parse_or() {
        GuardExpr lhs = parse_and();
        while (eat('|')) {
            GuardExpr node;
            node.kind = GuardExpr::Kind::Or;
            node.lhs = std::make_shared<GuardExpr>(std::move(lhs));
            node.rhs = std::make_shared<GuardExpr>(parse_and());
            lhs = std::move(node);
        }
        return lhs;
    }

    GuardExpr parse_and() {
        GuardExpr lhs = parse_unary();
        while (eat('&')) {
            GuardExpr node;
            node.kind = GuardExpr::Kind::And;
            node.lhs = std::make_shared<GuardExpr>(std::move(lhs));
            node.rhs = std::make_shared<GuardExpr>(parse_unary());
            lhs = std::move(node);
        }
        return lhs;
    }

    GuardExpr parse_unary() {
        if (eat('!')) {
            GuardExpr node;
            node.kind = GuardExpr::Kind::Not;
            node.lhs = std::make_shared<GuardExpr>(parse_unary());
            return node;
        }
        if (eat('(')) {
            GuardExpr inner = parse_or();
            if (!eat(')')) throw Error("MalformedDocument", "unbalanced ( in guard: " + text);
            return inner;
        }
        skip();
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        if (start == pos) throw Error("MalformedDocument", "expected proposition in guard: " + text);
        GuardExpr node;
        node.kind = GuardExpr::Kind::Var;
        node.name = text.substr(start, pos - start);
        return node;
    }
};

}  // namespace

GuardExpr parse_guard(const std::string& text) {
    GuardParser p(text);
    GuardExpr g = p.parse_or();
    p.skip();
    if (p.pos != text.size())
        throw Error("MalformedDocument", "trailing input in guard: " + text);
    return g;
}

bool guard_eval(const GuardExpr& g, const std::set<std::string>& labels) {
    switch (g.kind) {
        case GuardExpr::Kind::Var:
            return labels.count(g.name) > 0;
        case GuardExpr::Kind::Not:
            return !guard_eval(*g.lhs, labels);
        case GuardExpr::Kind::And:
            return guard_eval(*g.lhs, labels) && guard_eval(*g.rhs, labels);
        case GuardExpr::Kind::Or:
            return guard_eval(*g.lhs, labels) || guard_eval(*g.rhs, labels);
    }
    return false;
}

int Nfa::state_index(const std::string& id) const {
    for (std::size_t i = 0; i < states.size(); ++i)
        if (states[i] == id) return static_cast<int>(i);
    throw Error("UnknownStateReference", "no NFA state named '" + id + "'");
}

void Nfa::add_transition(const std::string& from, const std::string& guard,
                         const std::string& to) {
    transitions.push_back(Transition{state_index(from), guard, parse_guard(guard), state_index(to)});
}

std::set<int> Nfa::step(const std::set<int>& current, const std::set<std::string>& letter) const {
    std::set<int> next;
    for (const Transition& t : transitions)
        if (current.count(t.from) && guard_eval(t.compiled, letter)) next.insert(t.to);
    return next;
}

bool Nfa::accepts_set(const std::set<int>& set) const {
    for (int q : set)
        if (accepting.count(q)) return true;
    return false;
}

bool Nfa::accepts_word(const std::vector<std::set<std::string>>& word) const {
    std::set<int> current{initial};
    for (const auto& letter : word) {
        current = step(current, letter);
        if (accepts_set(current)) return true;
        if (current.empty()) return false;
    }
    return false;
}

Nfa parse_nfa(const std::string& document) {
    json doc = json::parse(document, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw Error("MalformedDocument", "invalid NFA JSON");
    Nfa a;
    for (const json& s : doc.at("states")) a.states.push_back(s.get<std::string>());
    a.initial = a.state_index(doc.at("initial").get<std::string>());
    for (const json& s : doc.at("accepting")) a.accepting.insert(a.state_index(s.get<std::string>()));
    for (const json& t : doc.at("transitions"))
        a.add_transition(t.at("from").get<std::string>(), t.at("guard").get<std::string>(),
                         t.at("to").get<std::string>());
    return a;
}

std::string serialize_nfa(const Nfa& a) {
    json doc;
    doc["states"] = a.states;
    doc["initial"] = a.states[a.initial];
    doc["accepting"] = json::array();
    for (int s : a.accepting) doc["accepting"].push_back(a.states[s]);
    doc["transitions"] = json::array();
    for (const Nfa::Transition& t : a.transitions) {
        json jt;
        jt["from"] = a.states[t.from];
        jt["guard"] = t.guard;
        jt["to"] = a.states[t.to];
        doc["transitions"].push_back(jt);
    }
    return doc.dump(2);
}

}  // namespace mdpsat
