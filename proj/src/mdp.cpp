#include "mdpsat/mdp.hpp"

#include <algorithm>
#include <deque>

#include <json.hpp>

namespace mdpsat {

using nlohmann::json;

int Mdp::find_state(const std::string& id) const {
    for (int i = 0; i < num_states(); ++i)
        if (states[i].id == id) return i;
    return -1;
}

int Mdp::state_index(const std::string& id) const {
    int i = find_state(id);
    if (i < 0) throw Error("UnknownStateReference", "no state named '" + id + "'");
    return i;
}

int Mdp::add_state(const std::string& id, std::vector<std::string> labels) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    states.push_back(State{id, std::move(labels), {}});
    return num_states() - 1;
}

Action& Mdp::add_action(int state, const std::string& name, Int weight) {
    states[state].actions.push_back(Action{name, std::move(weight), {}});
    return states[state].actions.back();
}

void Mdp::make_absorbing(int state) {
    states[state].actions.clear();
    Action& a = add_action(state, "loop", 0);
    a.branches.push_back(Transition{state, Rat(1)});
}

Int Mdp::max_abs_weight() const {
    Int w(0);
    for (const State& s : states)
        for (const Action& a : s.actions)
            if (abs(a.weight) > w) w = abs(a.weight);
    return w;
}

bool Mdp::weights_nonnegative() const {
    for (const State& s : states)
        for (const Action& a : s.actions)
            if (a.weight < 0) return false;
    return true;
}

std::vector<int> reachable_states(const Mdp& m) {
    std::vector<char> seen(m.num_states(), 0);
    std::deque<int> queue;
    if (m.num_states() > 0) {
        seen[m.initial] = 1;
        queue.push_back(m.initial);
    }
    std::vector<int> order;
    while (!queue.empty()) {
        int s = queue.front();
        queue.pop_front();
        order.push_back(s);
        for (const Action& a : m.states[s].actions)
            for (const Transition& t : a.branches)
                if (!seen[t.to]) {
                    seen[t.to] = 1;
                    queue.push_back(t.to);
                }
    }
    return order;
}

namespace {

json parse_json(const std::string& document) {
    json doc = json::parse(document, nullptr, false);
    if (doc.is_discarded()) throw Error("MalformedDocument", "invalid JSON");
    return doc;
}

std::string require_string(const json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_string())
        throw Error("MalformedDocument", "missing string field '" + key + "'");
    return j[key].get<std::string>();
}

}  // namespace

Mdp parse_mdp(const std::string& document) {
    json doc = parse_json(document);
    if (!doc.is_object() || !doc.contains("states") || !doc["states"].is_array())
        throw Error("MalformedDocument", "missing 'states' array");
    Mdp m;
    for (const json& js : doc["states"]) {
        std::vector<std::string> labels;
        if (js.contains("labels")) {
            if (!js["labels"].is_array()) throw Error("MalformedDocument", "'labels' not an array");
            for (const json& l : js["labels"]) labels.push_back(l.get<std::string>());
        }
        std::string id = require_string(js, "id");
        if (m.find_state(id) >= 0) throw Error("MalformedDocument", "duplicate state id '" + id + "'");
        m.add_state(id, std::move(labels));
    }
    m.initial = m.state_index(require_string(doc, "initial"));
    if (doc.contains("actions")) {
        if (!doc["actions"].is_array()) throw Error("MalformedDocument", "'actions' not an array");
        for (const json& ja : doc["actions"]) {
            int s = m.state_index(require_string(ja, "state"));
            Action& act = m.add_action(s, require_string(ja, "name"),
                                       int_parse(require_string(ja, "weight")));
            if (!ja.contains("transitions") || !ja["transitions"].is_array())
                throw Error("MalformedDocument", "action without 'transitions'");
            Rat sum(0);
            for (const json& jt : ja["transitions"]) {
                int to = m.state_index(require_string(jt, "to"));
                Rat p = rat_parse(require_string(jt, "prob"));
                act.branches.push_back(Transition{to, p});
                sum += p;
            }
            if (sum != 1)
                throw Error("ProbabilitySumNotOne", "state '" + m.states[s].id + "' action '" +
                                                        act.name + "' sums to " + rat_str(sum));
        }
    }
    for (const std::string key : {"goal", "fail"}) {
        if (!doc.contains(key)) continue;
        for (const json& jid : doc[key]) {
            int idx = m.state_index(jid.get<std::string>());
            (key == std::string("goal") ? m.goal : m.fail).insert(idx);
        }
    }
    if (static_cast<int>(reachable_states(m).size()) != m.num_states()) {
        for (int s = 0; s < m.num_states(); ++s) {
            auto reach = reachable_states(m);
            if (std::find(reach.begin(), reach.end(), s) == reach.end())
                throw Error("UnreachableState", "state '" + m.states[s].id + "' unreachable");
        }
    }
    return m;
}

std::string serialize_mdp(const Mdp& m) {
    json doc;
    doc["states"] = json::array();
    for (const State& s : m.states) {
        json js;
        js["id"] = s.id;
        js["labels"] = s.labels;
        doc["states"].push_back(js);
    }
    doc["initial"] = m.states[m.initial].id;
    doc["actions"] = json::array();
    for (const State& s : m.states)
        for (const Action& a : s.actions) {
            json ja;
            ja["state"] = s.id;
            ja["name"] = a.name;
            ja["weight"] = int_str(a.weight);
            ja["transitions"] = json::array();
            for (const Transition& t : a.branches) {
                json jt;
                jt["to"] = m.states[t.to].id;
                jt["prob"] = rat_str(t.prob);
                ja["transitions"].push_back(jt);
            }
            doc["actions"].push_back(ja);
        }
    auto names = [&](const std::set<int>& set) {
        std::vector<std::string> out;
        for (int s : set) out.push_back(m.states[s].id);
        return out;
    };
    doc["goal"] = names(m.goal);
    doc["fail"] = names(m.fail);
    return doc.dump(2);
}

std::vector<std::string> validate_mdp(const Mdp& m) {
    std::vector<std::string> diags;
    if (m.num_states() == 0) {
        diags.push_back("EmptyModel");
        return diags;
    }
    for (int s = 0; s < m.num_states(); ++s) {
        const State& st = m.states[s];
        if (st.actions.empty()) diags.push_back("NoEnabledAction(" + st.id + ")");
        for (const Action& a : st.actions) {
            Rat sum(0);
            for (const Transition& t : a.branches) {
                if (t.prob < 0 || t.prob > 1)
                    diags.push_back("ProbabilityOutOfRange(" + st.id + "," + a.name + ")");
                if (t.to < 0 || t.to >= m.num_states())
                    diags.push_back("UnknownStateReference(" + st.id + "," + a.name + ")");
                sum += t.prob;
            }
            if (sum != 1) diags.push_back("ProbabilitySumNotOne(" + st.id + "," + a.name + ")");
        }
    }
    for (int g : m.goal)
        if (m.fail.count(g)) diags.push_back("GoalFailOverlap(" + m.states[g].id + ")");
    // Trap-set states are absorbing in every construction of this artifact;
    // flag self-looping traps that carry weight.
    for (int s : m.goal) {
        const State& st = m.states[s];
        if (st.actions.size() == 1 && st.actions[0].branches.size() == 1 &&
            st.actions[0].branches[0].to == s && st.actions[0].weight != 0)
            diags.push_back("AbsorbingWeightNonzero(" + st.id + ")");
    }
    if (static_cast<int>(reachable_states(m).size()) != m.num_states()) {
        auto reach = reachable_states(m);
        for (int s = 0; s < m.num_states(); ++s)
            if (std::find(reach.begin(), reach.end(), s) == reach.end())
                diags.push_back("UnreachableState(" + m.states[s].id + ")");
    }
    return diags;
}

bool mdp_equal(const Mdp& a, const Mdp& b) {
    if (a.num_states() != b.num_states() || a.initial != b.initial || a.goal != b.goal ||
        a.fail != b.fail)
        return false;
    for (int s = 0; s < a.num_states(); ++s) {
        const State &x = a.states[s], &y = b.states[s];
        if (x.id != y.id || x.labels != y.labels || x.actions.size() != y.actions.size())
            return false;
        for (std::size_t i = 0; i < x.actions.size(); ++i) {
            const Action &p = x.actions[i], &q = y.actions[i];
            if (p.name != q.name || p.weight != q.weight || p.branches.size() != q.branches.size())
                return false;
            for (std::size_t j = 0; j < p.branches.size(); ++j)
                if (p.branches[j].to != q.branches[j].to || p.branches[j].prob != q.branches[j].prob)
                    return false;
        }
    }
    return true;
}

}  // namespace mdpsat
