#include "mdpsat/scheduler.hpp"

#include <algorithm>
#include <deque>
#include <functional>

#include "mdpsat/matrix.hpp"

namespace mdpsat {

Int WeightMemoryScheduler::next_mode(const Mdp& m, int source, const Int& mode,
                                     const Int& actionWeight, int target) const {
    if (resetOnGoalFail && m.is_trap(target)) return 0;
    if (segmentMode && m.is_trap(source)) return 0;
    Int next = mode + actionWeight;
    if (cap >= 0 && next > cap) next = cap;
    return next;
}

int WeightMemoryScheduler::action_for(int state, const Int& mode) const {
    auto it = choice.find({state, mode});
    return it == choice.end() ? -1 : it->second;
}

namespace {

// Shared BFS product construction over (state, mode) pairs.
InducedChain build_chain(const Mdp& m,
                         const std::function<int(int, const Int&)>& pick,
                         const std::function<Int(int, const Int&, const Int&, int)>& update) {
    InducedChain chain;
    std::map<std::pair<int, Int>, int> index;
    std::deque<int> queue;
    auto intern = [&](int state, const Int& mode) {
        auto [it, fresh] = index.try_emplace({state, mode}, chain.num_nodes());
        if (fresh) {
            chain.nodes.push_back(InducedChain::Node{state, mode, -1});
            chain.rows.emplace_back();
            chain.stepWeight.emplace_back(0);
            queue.push_back(it->second);
        }
        return it->second;
    };
    chain.initial = intern(m.initial, 0);
    while (!queue.empty()) {
        int node = queue.front();
        queue.pop_front();
        int state = chain.nodes[node].state;
        Int mode = chain.nodes[node].mode;
        int a = pick(state, mode);
        // States with a single action need no decision; this lets witnesses
        // omit entries for absorbing traps.
        if (a < 0 && m.states[state].actions.size() == 1) a = 0;
        if (a < 0 || a >= static_cast<int>(m.states[state].actions.size()))
            throw Error("SchedulerPartial", "no action at state '" + m.states[state].id +
                                                "' mode " + int_str(mode));
        const Action& act = m.states[state].actions[a];
        chain.nodes[node].action = a;
        chain.stepWeight[node] = act.weight;
        for (const Transition& t : act.branches) {
            int succ = intern(t.to, update(state, mode, act.weight, t.to));
            chain.rows[node].push_back({succ, t.prob});
        }
    }
    return chain;
}

}  // namespace

InducedChain induce_chain(const Mdp& m, const MemorylessPolicy& policy) {
    return build_chain(
        m, [&](int state, const Int&) { return state < static_cast<int>(policy.choice.size())
                                                   ? policy.choice[state]
                                                   : -1; },
        [](int, const Int&, const Int&, int) { return Int(0); });
}

InducedChain induce_chain(const Mdp& m, const WeightMemoryScheduler& sched) {
    return build_chain(
        m, [&](int state, const Int& mode) { return sched.action_for(state, mode); },
        [&](int source, const Int& mode, const Int& weight, int target) {
            return sched.next_mode(m, source, mode, weight, target);
        });
}

Unfolding weight_unfold(const Mdp& m, const Int& cap) {
    if (cap < 0) throw Error("NegativeWeight", "unfolding cap must be non-negative");
    if (!m.weights_nonnegative()) throw Error("NegativeWeight", "unfolding needs weights >= 0");
    Unfolding u;
    std::map<std::pair<int, Int>, int> index;
    std::deque<int> queue;
    auto intern = [&](int state, const Int& level) {
        auto [it, fresh] = index.try_emplace({state, level}, u.mdp.num_states());
        if (fresh) {
            u.mdp.add_state(m.states[state].id + "@" + int_str(level), m.states[state].labels);
            u.info.push_back({state, level});
            queue.push_back(it->second);
        }
        return it->second;
    };
    u.mdp.initial = intern(m.initial, 0);
    while (!queue.empty()) {
        int node = queue.front();
        queue.pop_front();
        auto [state, level] = u.info[node];
        if (m.is_goal(state)) {
            u.mdp.make_absorbing(node);
            u.mdp.goal.insert(node);
            u.terminalWeight[node] = level;
            u.goalTerminals[node] = state;
            continue;
        }
        if (level == cap) {
            u.mdp.make_absorbing(node);
            u.mdp.goal.insert(node);
            u.terminalWeight[node] = cap;
            u.saturatedTerminals[node] = state;
            continue;
        }
        for (const Action& a : m.states[state].actions) {
            Action& pa = u.mdp.add_action(node, a.name, a.weight);
            for (const Transition& t : a.branches) {
                Int next = level + a.weight;
                if (next > cap) next = cap;
                pa.branches.push_back(Transition{intern(t.to, next), t.prob});
            }
        }
    }
    return u;
}

// ---- chain analysis ----

std::vector<std::vector<int>> chain_bsccs(const ChainRows& rows) {
    const int n = static_cast<int>(rows.size());
    // Iterative Tarjan SCC.
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<char> onStack(n, 0);
    std::vector<int> stack;
    std::vector<std::vector<int>> sccs;
    int counter = 0;
    struct Frame {
        int v;
        std::size_t edge;
    };
    for (int root = 0; root < n; ++root) {
        if (index[root] >= 0) continue;
        std::vector<Frame> frames{{root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        onStack[root] = 1;
        while (!frames.empty()) {
            Frame& f = frames.back();
            if (f.edge < rows[f.v].size()) {
                int w = rows[f.v][f.edge++].first;
                if (index[w] < 0) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    onStack[w] = 1;
                    frames.push_back({w, 0});
                } else if (onStack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
            } else {
                int v = f.v;
                frames.pop_back();
                if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
                if (low[v] == index[v]) {
                    std::vector<int> scc;
                    int w;
                    do {
                        w = stack.back();
                        stack.pop_back();
                        onStack[w] = 0;
                        comp[w] = static_cast<int>(sccs.size());
                        scc.push_back(w);
                    } while (w != v);
                    std::sort(scc.begin(), scc.end());
                    sccs.push_back(std::move(scc));
                }
            }
        }
    }
    std::vector<std::vector<int>> bsccs;
    for (const auto& scc : sccs) {
        bool bottom = true;
        for (int v : scc)
            for (const auto& [w, p] : rows[v])
                if (comp[w] != comp[v]) bottom = false;
        if (bottom) bsccs.push_back(scc);
    }
    return bsccs;
}

std::vector<Rat> chain_until_prob(const ChainRows& rows, const std::vector<char>& target,
                                  const std::vector<char>& avoid) {
    const int n = static_cast<int>(rows.size());
    // Predecessor lists for the backward can-reach sweep.
    std::vector<std::vector<int>> preds(n);
    for (int v = 0; v < n; ++v)
        for (const auto& [w, p] : rows[v]) preds[w].push_back(v);
    std::vector<char> canReach(n, 0);
    std::deque<int> queue;
    for (int v = 0; v < n; ++v)
        if (target[v]) {
            canReach[v] = 1;
            queue.push_back(v);
        }
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (int u : preds[v])
            if (!canReach[u] && !avoid[u] && !target[u]) {
                canReach[u] = 1;
                queue.push_back(u);
            }
    }
    // Linear system over the transient can-reach states.
    std::vector<int> solveSet, pos(n, -1);
    for (int v = 0; v < n; ++v)
        if (canReach[v] && !target[v]) {
            pos[v] = static_cast<int>(solveSet.size());
            solveSet.push_back(v);
        }
    std::vector<Rat> result(n, Rat(0));
    for (int v = 0; v < n; ++v)
        if (target[v]) result[v] = 1;
    if (!solveSet.empty()) {
        const std::size_t k = solveSet.size();
        RatMatrix a = RatMatrix::identity(k), b(k, 1);
        for (std::size_t i = 0; i < k; ++i)
            for (const auto& [w, p] : rows[solveSet[i]]) {
                if (target[w])
                    b.at(i, 0) += p;
                else if (pos[w] >= 0)
                    a.at(i, pos[w]) -= p;
            }
        RatMatrix x = a.solve(b);
        for (std::size_t i = 0; i < k; ++i) result[solveSet[i]] = x.at(i, 0);
    }
    return result;
}

std::vector<Rat> chain_steady_state(const ChainRows& rows, const std::vector<int>& bscc) {
    const std::size_t k = bscc.size();
    std::vector<int> pos(rows.size(), -1);
    for (std::size_t i = 0; i < k; ++i) pos[bscc[i]] = static_cast<int>(i);
    // Solve (I - P^T + 1*1^T) x = 1; the unique solution is the stationary
    // distribution of the irreducible restriction.
    RatMatrix a(k, k), b(k, 1);
    for (std::size_t i = 0; i < k; ++i) {
        b.at(i, 0) = 1;
        for (std::size_t j = 0; j < k; ++j) a.at(i, j) = 1;
        a.at(i, i) += 1;
    }
    for (std::size_t j = 0; j < k; ++j)
        for (const auto& [w, p] : rows[bscc[j]]) {
            if (pos[w] < 0) throw Error("InternalInvariant", "BSCC not closed");
            a.at(pos[w], j) -= p;
        }
    RatMatrix x = a.solve(b);
    std::vector<Rat> result(rows.size(), Rat(0));
    for (std::size_t i = 0; i < k; ++i) result[bscc[i]] = x.at(i, 0);
    return result;
}

std::optional<Rat> chain_expected_steps(const ChainRows& rows, const std::vector<char>& target,
                                        int from) {
    const int n = static_cast<int>(rows.size());
    if (target[from]) return Rat(0);
    std::vector<Rat> reach = chain_until_prob(rows, target, std::vector<char>(n, 0));
    if (reach[from] != 1) return std::nullopt;
    std::vector<int> solveSet, pos(n, -1);
    for (int v = 0; v < n; ++v)
        if (!target[v] && reach[v] == 1) {
            pos[v] = static_cast<int>(solveSet.size());
            solveSet.push_back(v);
        }
    const std::size_t k = solveSet.size();
    RatMatrix a = RatMatrix::identity(k), b(k, 1);
    for (std::size_t i = 0; i < k; ++i) {
        b.at(i, 0) = 1;
        for (const auto& [w, p] : rows[solveSet[i]])
            if (pos[w] >= 0) a.at(i, pos[w]) -= p;
    }
    RatMatrix x = a.solve(b);
    return x.at(pos[from], 0);
}

}  // namespace mdpsat
