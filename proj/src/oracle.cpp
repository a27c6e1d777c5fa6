#include "mdpsat/oracle.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <functional>

#include "mdpsat/matrix.hpp"

namespace mdpsat {

namespace {

constexpr long kMaxMembers = 200000;    // materialized schedulers
constexpr long kMaxTreeNodes = 32768;   // history-tree unfolding size
constexpr long kMaxSupportNodes = 131072;  // (node, weight) pairs of a law

// Own reachability; the oracle stays off the analysis modules.
std::vector<char> reachable_mask(const Mdp& m) {
    std::vector<char> seen(m.num_states(), 0);
    std::deque<int> queue{m.initial};
    seen[m.initial] = 1;
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (const Action& a : m.states[v].actions)
            for (const Transition& t : a.branches)
                if (!seen[t.to]) {
                    seen[t.to] = 1;
                    queue.push_back(t.to);
                }
    }
    return seen;
}

// Cycle among reachable non-trap states (trap targets cut the walk).
bool has_nontrap_cycle(const Mdp& m) {
    std::vector<int> color(m.num_states(), 0);
    std::function<bool(int)> dfs = [&](int v) {
        color[v] = 1;
        for (const Action& a : m.states[v].actions)
            for (const Transition& t : a.branches) {
                if (m.is_trap(t.to)) continue;
                if (color[t.to] == 1) return true;
                if (color[t.to] == 0 && dfs(t.to)) return true;
            }
        color[v] = 2;
        return false;
    };
    return !m.is_trap(m.initial) && dfs(m.initial);
}

// Tree unfolding of an acyclic model: one fresh state per path prefix.
Mdp history_tree(const Mdp& m) {
    if (has_nontrap_cycle(m))
        throw Error("SpaceInfinite", "history enumeration needs an acyclic model");
    Mdp tree;
    std::deque<std::pair<int, int>> queue;  // (tree node, original state)
    auto fresh = [&](int orig) {
        int node = tree.add_state(m.states[orig].id + "#" + std::to_string(tree.num_states()),
                                  m.states[orig].labels);
        if (tree.num_states() > kMaxTreeNodes)
            throw Error("InternalInvariant", "history tree exceeds the size budget");
        queue.push_back({node, orig});
        return node;
    };
    tree.initial = fresh(m.initial);
    while (!queue.empty()) {
        auto [node, orig] = queue.front();
        queue.pop_front();
        if (m.is_trap(orig)) {
            tree.make_absorbing(node);
            (m.is_goal(orig) ? tree.goal : tree.fail).insert(node);
            continue;
        }
        for (const Action& a : m.states[orig].actions) {
            Action& ta = tree.add_action(node, a.name, a.weight);
            for (const Transition& t : a.branches)
                ta.branches.push_back(Transition{fresh(t.to), t.prob});
        }
    }
    return tree;
}

struct WeightMemoryPoints {
    std::vector<std::pair<int, Int>> pairs;  // all reachable (state, mode)
};

WeightMemoryPoints weight_memory_points(const Mdp& m, const SchedulerSpace& space) {
    if (space.cap < 0) throw Error("SpaceInfinite", "uncapped weight memory is infinite");
    WeightMemoryScheduler proto;
    proto.cap = space.cap;
    proto.resetOnGoalFail = space.resetOnGoalFail;
    proto.segmentMode = space.segmentMode;
    WeightMemoryPoints out;
    std::map<std::pair<int, Int>, char> seen;
    std::deque<std::pair<int, Int>> queue{{m.initial, 0}};
    seen[{m.initial, 0}] = 1;
    while (!queue.empty()) {
        auto [state, mode] = queue.front();
        queue.pop_front();
        out.pairs.push_back({state, mode});
        for (const Action& a : m.states[state].actions)
            for (const Transition& t : a.branches) {
                Int next = proto.next_mode(m, state, mode, a.weight, t.to);
                if (seen.emplace(std::make_pair(t.to, next), 1).second)
                    queue.push_back({t.to, next});
            }
    }
    std::sort(out.pairs.begin(), out.pairs.end());
    return out;
}

}  // namespace

Int enumeration_count(const Mdp& m, const SchedulerSpace& space) {
    Int count = 1;
    switch (space.kind) {
        case SchedulerSpace::Kind::Memoryless: {
            std::vector<char> reach = reachable_mask(m);
            for (int s = 0; s < m.num_states(); ++s)
                if (reach[s]) count *= (long)m.states[s].actions.size();
            return count;
        }
        case SchedulerSpace::Kind::WeightMemory: {
            for (const auto& [state, mode] : weight_memory_points(m, space).pairs) {
                (void)mode;
                count *= (long)m.states[state].actions.size();
            }
            return count;
        }
        case SchedulerSpace::Kind::AcyclicHistory: {
            Mdp tree = history_tree(m);
            for (int s = 0; s < tree.num_states(); ++s)
                count *= (long)tree.states[s].actions.size();
            return count;
        }
    }
    throw Error("InternalInvariant", "unknown scheduler space");
}

SchedulerEnumeration enumerate_schedulers(const Mdp& m, const SchedulerSpace& space) {
    SchedulerEnumeration out;
    out.space = space;
    out.count = enumeration_count(m, space);
    if (out.count > kMaxMembers)
        throw Error("InternalInvariant",
                    "scheduler space has " + int_str(out.count) + " members; budget exceeded");

    if (space.kind == SchedulerSpace::Kind::WeightMemory) {
        out.model = m;
        WeightMemoryPoints pts = weight_memory_points(m, space);
        std::vector<std::pair<int, Int>> decisions;
        for (const auto& pr : pts.pairs)
            if (m.states[pr.first].actions.size() > 1) decisions.push_back(pr);
        std::vector<int> pick(decisions.size(), 0);
        bool done = false;
        while (!done) {
            SchedulerInstance inst;
            inst.sched.cap = space.cap;
            inst.sched.resetOnGoalFail = space.resetOnGoalFail;
            inst.sched.segmentMode = space.segmentMode;
            for (const auto& pr : pts.pairs) inst.sched.choice[pr] = 0;
            for (std::size_t i = 0; i < decisions.size(); ++i) {
                inst.sched.choice[decisions[i]] = pick[i];
                inst.choices[m.states[decisions[i].first].id + "@" + int_str(decisions[i].second)] =
                    m.states[decisions[i].first].actions[pick[i]].name;
            }
            inst.chain = induce_chain(m, inst.sched);
            out.members.push_back(std::move(inst));
            done = true;
            for (std::size_t i = 0; i < pick.size(); ++i) {
                if (++pick[i] < (int)m.states[decisions[i].first].actions.size()) {
                    done = false;
                    break;
                }
                pick[i] = 0;
            }
            if (decisions.empty()) break;
        }
    } else {
        out.onTree = space.kind == SchedulerSpace::Kind::AcyclicHistory;
        out.model = out.onTree ? history_tree(m) : m;
        const Mdp& model = out.model;
        std::vector<char> reach = reachable_mask(model);
        std::vector<int> decisions;
        for (int s = 0; s < model.num_states(); ++s)
            if (reach[s] && model.states[s].actions.size() > 1) decisions.push_back(s);
        std::vector<int> pick(decisions.size(), 0);
        bool done = false;
        while (!done) {
            SchedulerInstance inst;
            inst.policy = MemorylessPolicy(model.num_states());
            for (int s = 0; s < model.num_states(); ++s) inst.policy.choice[s] = 0;
            for (std::size_t i = 0; i < decisions.size(); ++i) {
                inst.policy.choice[decisions[i]] = pick[i];
                inst.choices[model.states[decisions[i]].id] =
                    model.states[decisions[i]].actions[pick[i]].name;
            }
            inst.chain = induce_chain(model, inst.policy);
            out.members.push_back(std::move(inst));
            done = true;
            for (std::size_t i = 0; i < pick.size(); ++i) {
                if (++pick[i] < (int)model.states[decisions[i]].actions.size()) {
                    done = false;
                    break;
                }
                pick[i] = 0;
            }
            if (decisions.empty()) break;
        }
    }
    if (Int((long)out.members.size()) != out.count)
        throw Error("InternalInvariant", "enumeration count mismatch");
    return out;
}

// ---------------------------------------------------------------------------
// Chain evaluations
// ---------------------------------------------------------------------------

namespace {

std::vector<char> node_mask(const Mdp& model, const InducedChain& chain,
                            const std::set<int>& states) {
    std::vector<char> mask(chain.num_nodes(), 0);
    for (int v = 0; v < chain.num_nodes(); ++v)
        if (states.count(chain.nodes[v].state)) mask[v] = 1;
    (void)model;
    return mask;
}

// Nodes that can reach a masked node (backward closure on the chain graph).
std::vector<char> can_reach(const ChainRows& rows, const std::vector<char>& target) {
    const int n = (int)rows.size();
    std::vector<std::vector<int>> pred(n);
    for (int v = 0; v < n; ++v)
        for (const auto& [u, p] : rows[v]) {
            (void)p;
            pred[u].push_back(v);
        }
    std::vector<char> seen = target;
    std::deque<int> queue;
    for (int v = 0; v < n; ++v)
        if (seen[v]) queue.push_back(v);
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (int u : pred[v])
            if (!seen[u]) {
                seen[u] = 1;
                queue.push_back(u);
            }
    }
    return seen;
}

}  // namespace

ChainValues chain_values(const Mdp& model, const InducedChain& chain) {
    std::vector<char> goalMask = node_mask(model, chain, model.goal);
    if (goalMask[chain.initial]) return ChainValues{Rat(1), Rat(0)};
    std::vector<char> relevant = can_reach(chain.rows, goalMask);
    std::vector<int> sub;
    std::vector<int> pos(chain.num_nodes(), -1);
    for (int v = 0; v < chain.num_nodes(); ++v)
        if (relevant[v] && !goalMask[v]) {
            pos[v] = (int)sub.size();
            sub.push_back(v);
        }
    if (!relevant[chain.initial]) return ChainValues{Rat(0), Rat(0)};
    const std::size_t n = sub.size();
    RatMatrix mat = RatMatrix::identity(n), rhsR(n, 1);
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& [u, p] : chain.rows[sub[i]]) {
            if (goalMask[u])
                rhsR.at(i, 0) += p;
            else if (pos[u] >= 0)
                mat.at(i, pos[u]) -= p;
        }
    RatMatrix solR = mat.solve(rhsR);
    auto rOf = [&](int v) {
        if (goalMask[v]) return Rat(1);
        return pos[v] >= 0 ? solR.at(pos[v], 0) : Rat(0);
    };
    RatMatrix rhsE(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const Rat w = Rat(chain.stepWeight[sub[i]]);
        for (const auto& [u, p] : chain.rows[sub[i]]) rhsE.at(i, 0) += p * w * rOf(u);
    }
    RatMatrix solE = mat.solve(rhsE);
    return ChainValues{solR.at(pos[chain.initial], 0), solE.at(pos[chain.initial], 0)};
}

Rat chain_wlf_value(const LongRunSpec& spec, const InducedChain& chain) {
    std::vector<char> goalMask(chain.num_nodes(), 0), failMask(chain.num_nodes(), 0);
    for (int v = 0; v < chain.num_nodes(); ++v) {
        if (spec.goalSet.count(chain.nodes[v].state)) goalMask[v] = 1;
        if (spec.failSet.count(chain.nodes[v].state)) failMask[v] = 1;
    }
    std::vector<Rat> counted = chain_until_prob(chain.rows, goalMask, failMask);
    Rat total(0);
    for (const std::vector<int>& bscc : chain_bsccs(chain.rows)) {
        Rat inner(0);
        std::vector<Rat> steady = chain_steady_state(chain.rows, bscc);
        for (int v : bscc) inner += steady[v] * Rat(chain.stepWeight[v]) * counted[v];
        if (inner == 0) continue;
        std::vector<char> mask(chain.num_nodes(), 0);
        for (int v : bscc) mask[v] = 1;
        Rat absorb = chain_until_prob(chain.rows, mask, std::vector<char>(chain.num_nodes(), 0))
            [chain.initial];
        total += absorb * inner;
    }
    return total;
}

TerminalDist terminal_law(const Mdp& model, const InducedChain& chain) {
    std::vector<char> goalMask = node_mask(model, chain, model.goal);
    Rat reach = chain_until_prob(chain.rows, goalMask,
                                 std::vector<char>(chain.num_nodes(), 0))[chain.initial];
    if (reach != 1) throw Error("GoalNotAlmostSure", "goal is missed with positive probability");

    TerminalDist law;
    if (goalMask[chain.initial]) {
        law.atoms[0] = 1;
        return law;
    }
    // Product over (chain node, accumulated weight); goal entries terminate.
    std::map<std::pair<int, Int>, int> index;
    std::vector<std::pair<int, Int>> nodes;
    std::deque<int> queue;
    auto intern = [&](int v, const Int& w) {
        auto [it, fresh] = index.try_emplace({v, w}, (int)nodes.size());
        if (fresh) {
            nodes.push_back({v, w});
            if ((long)nodes.size() > kMaxSupportNodes)
                throw Error("InfiniteSupport", "weight support exceeds the internal bound");
            queue.push_back(it->second);
        }
        return it->second;
    };
    struct Edge {
        int to;  // -1: terminal
        Int terminalWeight;
        Rat prob;
    };
    std::vector<std::vector<Edge>> edges;
    intern(chain.initial, 0);
    while (!queue.empty()) {
        int node = queue.front();
        queue.pop_front();
        auto [v, w] = nodes[node];
        if ((int)edges.size() <= node) edges.resize(node + 1);
        const Int next = w + chain.stepWeight[v];
        for (const auto& [u, p] : chain.rows[v]) {
            if (goalMask[u])
                edges[node].push_back({-1, next, p});
            else
                edges[node].push_back({intern(u, next), 0, p});
        }
    }
    edges.resize(nodes.size());
    // Expected visit counts: nu = e0 (I - Q)^{-1}, one transposed solve.
    const std::size_t n = nodes.size();
    RatMatrix mat = RatMatrix::identity(n), rhs(n, 1);
    rhs.at(0, 0) = 1;  // index 0 is (initial, 0)
    for (std::size_t i = 0; i < n; ++i)
        for (const Edge& e : edges[i])
            if (e.to >= 0) mat.at(e.to, i) -= e.prob;  // transposed
    RatMatrix nu = mat.solve(rhs);
    for (std::size_t i = 0; i < n; ++i)
        for (const Edge& e : edges[i])
            if (e.to < 0) law.atoms[e.terminalWeight] += nu.at(i, 0) * e.prob;
    return law;
}

// ---------------------------------------------------------------------------
// Brute-force optima
// ---------------------------------------------------------------------------

namespace {

template <typename Eval>
BruteResult brute_optimize(const SchedulerEnumeration& en, bool maximize, Eval eval) {
    BruteResult out;
    out.spaceSize = en.count;
    bool have = false;
    for (std::size_t i = 0; i < en.members.size(); ++i) {
        std::optional<Rat> value = eval(en.members[i]);
        if (!value) continue;
        if (!have || (maximize ? *value > out.value : *value < out.value)) {
            have = true;
            out.value = *value;
            out.witnessIndex = (int)i;
            out.choices = en.members[i].choices;
        }
    }
    if (!have) throw Error("GoalProbabilityZero", "no admissible scheduler in the space");
    return out;
}

}  // namespace

BruteResult brute_pe(const Mdp& m, const SchedulerSpace& space, bool maximize) {
    SchedulerEnumeration en = enumerate_schedulers(m, space);
    return brute_optimize(en, maximize, [&](const SchedulerInstance& s) {
        return std::optional<Rat>(chain_values(en.model, s.chain).pe);
    });
}

BruteResult brute_ce(const Mdp& m, const SchedulerSpace& space, bool maximize) {
    SchedulerEnumeration en = enumerate_schedulers(m, space);
    return brute_optimize(en, maximize, [&](const SchedulerInstance& s) -> std::optional<Rat> {
        ChainValues v = chain_values(en.model, s.chain);
        if (v.goalProb == 0) return std::nullopt;
        return v.pe / v.goalProb;
    });
}

BruteResult brute_cvar(const Mdp& m, const SchedulerSpace& space, const Rat& p) {
    SchedulerEnumeration en = enumerate_schedulers(m, space);
    return brute_optimize(en, true, [&](const SchedulerInstance& s) {
        return std::optional<Rat>(cvar_of_dist(terminal_law(en.model, s.chain), p));
    });
}

BruteResult brute_wlf(const Mdp& m, const LongRunSpec& spec, const SchedulerSpace& space) {
    // The spec's Goal/Fail sets drive the weight-memory reset semantics.
    Mdp mm = m;
    mm.goal = spec.goalSet;
    mm.fail = spec.failSet;
    SchedulerEnumeration en = enumerate_schedulers(mm, space);
    return brute_optimize(en, true, [&](const SchedulerInstance& s) {
        return std::optional<Rat>(chain_wlf_value(spec, s.chain));
    });
}

// ---------------------------------------------------------------------------
// Seeded corpus
// ---------------------------------------------------------------------------

unsigned long corpus_seed() {
    if (const char* env = std::getenv("MDPSAT_SEED")) return std::strtoul(env, nullptr, 10);
    return 20260823ul;
}

namespace {

const std::vector<std::vector<Rat>>& branch_patterns() {
    static const std::vector<std::vector<Rat>> patterns = {
        {Rat(1)},
        {Rat(1, 2), Rat(1, 2)},
        {Rat(1, 4), Rat(3, 4)},
        {Rat(1, 2), Rat(1, 4), Rat(1, 4)},
    };
    return patterns;
}

long pick(std::mt19937_64& rng, long n) { return (long)(rng() % (unsigned long)n); }

}  // namespace

Mdp random_model(std::mt19937_64& rng, const CorpusOptions& opt) {
    for (int attempt = 0; attempt < 4096; ++attempt) {
        const int traps = opt.withFail ? 2 : 1;
        const int interior = 1 + (int)pick(rng, std::max(1, opt.maxStates - traps));
        Mdp m;
        for (int i = 0; i < interior; ++i) m.add_state("s" + std::to_string(i));
        int goal = m.add_state("goal");
        m.goal.insert(goal);
        m.make_absorbing(goal);
        int fail = -1;
        if (opt.withFail) {
            fail = m.add_state("fail");
            m.fail.insert(fail);
            m.make_absorbing(fail);
        }
        m.initial = 0;
        for (int i = 0; i < interior; ++i) {
            std::vector<int> targets;
            for (int j = opt.acyclic ? i + 1 : 0; j < interior; ++j)
                if (!opt.acyclic || j > i) targets.push_back(j);
            targets.push_back(goal);
            if (fail >= 0) targets.push_back(fail);
            const int na = 1 + (int)pick(rng, opt.maxActions);
            for (int a = 0; a < na; ++a) {
                Action& act = m.add_action(i, "a" + std::to_string(a),
                                           (long)pick(rng, opt.maxWeight + 1));
                const auto& pat = branch_patterns()[pick(rng, (long)branch_patterns().size())];
                std::map<int, Rat> merged;
                for (const Rat& p : pat) merged[targets[pick(rng, (long)targets.size())]] += p;
                for (const auto& [to, p] : merged) act.branches.push_back(Transition{to, p});
            }
        }
        std::vector<char> reach = reachable_mask(m);
        bool allReach = true;
        for (int s = 0; s < m.num_states(); ++s)
            if (!reach[s]) allReach = false;
        if (allReach && validate_mdp(m).empty()) return m;
    }
    throw Error("InternalInvariant", "random model generation did not converge");
}

Mdp random_strongly_connected(std::mt19937_64& rng, int maxStates, int maxActions,
                              int maxWeight) {
    for (int attempt = 0; attempt < 4096; ++attempt) {
        const int n = 2 + (int)pick(rng, std::max(1, maxStates - 1));
        Mdp m;
        for (int i = 0; i < n; ++i) m.add_state("s" + std::to_string(i));
        m.initial = 0;
        for (int i = 0; i < n; ++i) {
            const int na = 1 + (int)pick(rng, maxActions);
            for (int a = 0; a < na; ++a) {
                Action& act =
                    m.add_action(i, "a" + std::to_string(a), (long)pick(rng, maxWeight + 1));
                const auto& pat = branch_patterns()[pick(rng, (long)branch_patterns().size())];
                std::map<int, Rat> merged;
                for (std::size_t b = 0; b < pat.size(); ++b) {
                    // The first branch of the first action follows the ring,
                    // forcing strong connectivity.
                    int to = (a == 0 && b == 0) ? (i + 1) % n : (int)pick(rng, n);
                    merged[to] += pat[b];
                }
                for (const auto& [to, p] : merged) act.branches.push_back(Transition{to, p});
            }
        }
        if (validate_mdp(m).empty()) return m;
    }
    throw Error("InternalInvariant", "random model generation did not converge");
}

TerminalDist random_dist(std::mt19937_64& rng, int atoms, int maxAbsWeight) {
    TerminalDist d;
    std::vector<long> mass;
    long total = 0;
    std::set<long> support;
    while ((int)support.size() < atoms)
        support.insert(pick(rng, 2 * maxAbsWeight + 1) - maxAbsWeight);
    for (int i = 0; i < atoms; ++i) {
        mass.push_back(1 + pick(rng, 8));
        total += mass.back();
    }
    int i = 0;
    for (long w : support) {
        Rat p(mass[i++], total);
        p.canonicalize();
        d.atoms[Int(w)] = p;
    }
    return d;
}

}  // namespace mdpsat
