#include "mdpsat/graph.hpp"

#include <algorithm>
#include <deque>
#include <map>

#include "mdpsat/matrix.hpp"

namespace mdpsat {

bool Mec::has_state(int s) const {
    return std::binary_search(states.begin(), states.end(), s);
}

namespace {

// Tarjan SCC (iterative) over an adjacency-list graph; returns the component
// index of each node (components in reverse topological order).
std::vector<int> scc_components(const std::vector<std::vector<int>>& adj, int& count) {
    const int n = static_cast<int>(adj.size());
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1), stack;
    std::vector<char> onStack(n, 0);
    int counter = 0;
    count = 0;
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
            if (f.edge < adj[f.v].size()) {
                int w = adj[f.v][f.edge++];
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
                    int w;
                    do {
                        w = stack.back();
                        stack.pop_back();
                        onStack[w] = 0;
                        comp[w] = count;
                    } while (w != v);
                    ++count;
                }
            }
        }
    }
    return comp;
}

// Transition rows of a memoryless policy over the full state space.
ChainRows policy_rows(const Mdp& m, const MemorylessPolicy& policy) {
    ChainRows rows(m.num_states());
    for (int s = 0; s < m.num_states(); ++s) {
        const Action& a = m.states[s].actions.at(policy.choice[s]);
        for (const Transition& t : a.branches) rows[s].push_back({t.to, t.prob});
    }
    return rows;
}

std::vector<char> set_to_mask(const Mdp& m, const std::set<int>& set) {
    std::vector<char> mask(m.num_states(), 0);
    for (int s : set) mask[s] = 1;
    return mask;
}

}  // namespace

MecDecomposition mec_decompose(const Mdp& m) {
    const int n = m.num_states();
    // retained[s] = candidate action indices; alive[s] = still a candidate.
    std::vector<std::vector<int>> retained(n);
    std::vector<char> alive(n, 1);
    for (int s = 0; s < n; ++s)
        for (std::size_t a = 0; a < m.states[s].actions.size(); ++a)
            retained[s].push_back(static_cast<int>(a));
    bool changed = true;
    std::vector<int> comp(n, -1);
    int compCount = 0;
    while (changed) {
        changed = false;
        std::vector<std::vector<int>> adj(n);
        for (int s = 0; s < n; ++s)
            if (alive[s])
                for (int a : retained[s])
                    for (const Transition& t : m.states[s].actions[a].branches)
                        if (alive[t.to]) adj[s].push_back(t.to);
        comp = scc_components(adj, compCount);
        for (int s = 0; s < n; ++s) {
            if (!alive[s]) continue;
            std::vector<int> keep;
            for (int a : retained[s]) {
                bool inside = true;
                for (const Transition& t : m.states[s].actions[a].branches)
                    if (!alive[t.to] || comp[t.to] != comp[s]) inside = false;
                if (inside) keep.push_back(a);
            }
            if (keep.size() != retained[s].size()) changed = true;
            retained[s] = std::move(keep);
            if (retained[s].empty() && alive[s]) {
                alive[s] = 0;
                changed = true;
            }
        }
    }
    MecDecomposition d;
    d.mecOf.assign(n, -1);
    std::map<int, std::vector<int>> byComp;
    for (int s = 0; s < n; ++s)
        if (alive[s]) byComp[comp[s]].push_back(s);
    for (auto& [c, states] : byComp) {
        Mec mec;
        std::sort(states.begin(), states.end());
        mec.states = states;
        for (int s : states) {
            mec.actions.push_back(retained[s]);
            if (m.is_goal(s)) mec.containsGoal = true;
            if (m.is_fail(s)) mec.containsFail = true;
            for (int a : retained[s])
                if (m.states[s].actions[a].weight > 0) mec.positiveWeight = true;
            d.mecOf[s] = static_cast<int>(d.mecs.size());
        }
        d.mecs.push_back(std::move(mec));
    }
    return d;
}

ReachMaxData max_reach_prob(const Mdp& m, const std::set<int>& target,
                            const std::set<int>& avoid) {
    const int n = m.num_states();
    std::vector<char> isTarget = set_to_mask(m, target);
    std::vector<char> isAvoid = set_to_mask(m, avoid);
    for (int s = 0; s < n; ++s)
        if (isTarget[s]) isAvoid[s] = 0;  // target wins on overlap

    // Qualitative zero set: states that cannot reach target through
    // non-avoid states under any action. Pinning these to 0 makes the
    // Bellman system's fixpoint unique, so policy iteration terminating at a
    // fixpoint is guaranteed correct.
    std::vector<std::vector<int>> preds(n);
    for (int s = 0; s < n; ++s)
        for (const Action& a : m.states[s].actions)
            for (const Transition& t : a.branches) preds[t.to].push_back(s);
    std::vector<char> canReach(n, 0);
    std::deque<int> queue;
    for (int s = 0; s < n; ++s)
        if (isTarget[s]) {
            canReach[s] = 1;
            queue.push_back(s);
        }
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (int u : preds[v])
            if (!canReach[u] && !isAvoid[u]) {
                canReach[u] = 1;
                queue.push_back(u);
            }
    }

    // Policy iteration with strict improvement, lowest action index.
    MemorylessPolicy policy(n);
    for (int s = 0; s < n; ++s) policy.choice[s] = 0;
    std::vector<Rat> x;
    while (true) {
        x = chain_until_prob(policy_rows(m, policy), isTarget, isAvoid);
        bool improved = false;
        for (int s = 0; s < n; ++s) {
            if (isTarget[s] || isAvoid[s] || !canReach[s]) continue;
            for (std::size_t a = 0; a < m.states[s].actions.size(); ++a) {
                Rat q(0);
                for (const Transition& t : m.states[s].actions[a].branches) q += t.prob * x[t.to];
                if (q > x[s]) {
                    policy.choice[s] = static_cast<int>(a);
                    improved = true;
                    break;  // lowest improving index
                }
            }
        }
        if (!improved) break;
    }

    ReachMaxData data;
    data.pmax = x;
    data.witness = policy;
    data.pmaxAction.resize(n);
    data.actMax.resize(n);
    data.gapDelta = 1;
    bool anyGap = false;
    for (int s = 0; s < n; ++s) {
        for (std::size_t a = 0; a < m.states[s].actions.size(); ++a) {
            Rat q;
            if (isTarget[s]) {
                q = 1;  // the until is already satisfied
            } else if (isAvoid[s]) {
                q = 0;
            } else {
                for (const Transition& t : m.states[s].actions[a].branches) q += t.prob * x[t.to];
            }
            data.pmaxAction[s].push_back(q);
            if (q == x[s]) {
                data.actMax[s].insert(static_cast<int>(a));
            } else {
                if (q > x[s]) throw Error("InternalInvariant", "reachability Bellman violated");
                Rat gap = x[s] - q;
                if (!anyGap || gap < data.gapDelta) data.gapDelta = gap;
                anyGap = true;
            }
        }
        if (data.actMax[s].empty()) throw Error("InternalInvariant", "empty argmax action set");
    }
    return data;
}

std::vector<Rat> min_reach_prob(const Mdp& m, const std::set<int>& target) {
    const int n = m.num_states();
    std::vector<char> isTarget = set_to_mask(m, target);
    // Greatest fixpoint of sure avoidance: states with some action keeping
    // all successors avoiding. The minimum is 0 exactly there; pinning it
    // makes the Bellman fixpoint unique.
    std::vector<char> inZ(n, 1);
    for (int s = 0; s < n; ++s)
        if (isTarget[s]) inZ[s] = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int s = 0; s < n; ++s) {
            if (!inZ[s]) continue;
            bool hasStaying = false;
            for (const Action& a : m.states[s].actions) {
                bool stays = true;
                for (const Transition& t : a.branches)
                    if (!inZ[t.to]) stays = false;
                if (stays) hasStaying = true;
            }
            if (!hasStaying) {
                inZ[s] = 0;
                changed = true;
            }
        }
    }

    MemorylessPolicy policy(n);
    for (int s = 0; s < n; ++s) policy.choice[s] = 0;
    std::vector<Rat> x;
    while (true) {
        // Paths entering Z contribute 0 under a minimizing continuation.
        x = chain_until_prob(policy_rows(m, policy), isTarget, inZ);
        bool improved = false;
        for (int s = 0; s < n; ++s) {
            if (isTarget[s] || inZ[s]) continue;
            for (std::size_t a = 0; a < m.states[s].actions.size(); ++a) {
                Rat q(0);
                for (const Transition& t : m.states[s].actions[a].branches) q += t.prob * x[t.to];
                if (q < x[s]) {
                    policy.choice[s] = static_cast<int>(a);
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) break;
    }
    return x;
}

namespace {

// Almost-sure maximal reachability (the classic nested fixpoint), together
// with an attractor policy that reaches the target almost surely from every
// state of the result while keeping all successors inside it.
struct Prob1Data {
    std::vector<char> inP1;
    MemorylessPolicy attractor;
};

Prob1Data prob1_data(const Mdp& m, const std::vector<char>& isTarget) {
    const int n = m.num_states();
    Prob1Data d;
    d.inP1.assign(n, 1);
    d.attractor = MemorylessPolicy(n);
    while (true) {
        std::vector<char> inZ(n, 0);
        for (int s = 0; s < n; ++s)
            if (isTarget[s] && d.inP1[s]) inZ[s] = 1;
        bool grew = true;
        while (grew) {
            grew = false;
            for (int s = 0; s < n; ++s) {
                if (inZ[s] || !d.inP1[s]) continue;
                for (std::size_t a = 0; a < m.states[s].actions.size(); ++a) {
                    bool insideP1 = true, touchesZ = false;
                    for (const Transition& t : m.states[s].actions[a].branches) {
                        if (!d.inP1[t.to]) insideP1 = false;
                        if (inZ[t.to]) touchesZ = true;
                    }
                    if (insideP1 && touchesZ) {
                        inZ[s] = 1;
                        d.attractor.choice[s] = static_cast<int>(a);
                        grew = true;
                        break;
                    }
                }
            }
        }
        if (inZ == d.inP1) break;
        d.inP1 = inZ;
    }
    for (int s = 0; s < n; ++s)
        if (d.attractor.choice[s] < 0) d.attractor.choice[s] = 0;
    return d;
}

}  // namespace

std::vector<int> prob1_max(const Mdp& m, const std::set<int>& target) {
    Prob1Data d = prob1_data(m, set_to_mask(m, target));
    std::vector<int> out;
    for (int s = 0; s < m.num_states(); ++s)
        if (d.inP1[s]) out.push_back(s);
    return out;
}

Prob1Attractor prob1_max_attractor(const Mdp& m, const std::set<int>& target) {
    Prob1Data d = prob1_data(m, set_to_mask(m, target));
    return Prob1Attractor{d.inP1, d.attractor};
}

namespace {

// Exact minimal expected hitting time on an MDP whose target mask is given.
// Requires `from` to lie in the almost-sure maximal reachability set.
// Returns per-state values (only meaningful inside that set).
std::vector<Rat> min_steps_values(const Mdp& m, const std::vector<char>& isTarget,
                                  std::vector<char>& inP1) {
    const int n = m.num_states();
    Prob1Data p1 = prob1_data(m, isTarget);
    inP1 = p1.inP1;
    // Restrict to actions keeping all successors in the prob-1 set; the
    // attractor policy is proper, and unit costs keep improvements proper.
    std::vector<std::vector<int>> admissible(n);
    for (int s = 0; s < n; ++s) {
        if (!inP1[s] || isTarget[s]) continue;
        for (std::size_t a = 0; a < m.states[s].actions.size(); ++a) {
            bool inside = true;
            for (const Transition& t : m.states[s].actions[a].branches)
                if (!inP1[t.to]) inside = false;
            if (inside) admissible[s].push_back(static_cast<int>(a));
        }
        if (admissible[s].empty())
            throw Error("InternalInvariant", "prob-1 state without admissible action");
    }
    std::vector<int> solveSet, pos(n, -1);
    for (int s = 0; s < n; ++s)
        if (inP1[s] && !isTarget[s]) {
            pos[s] = static_cast<int>(solveSet.size());
            solveSet.push_back(s);
        }
    MemorylessPolicy policy = p1.attractor;
    std::vector<Rat> x(n, Rat(0));
    const std::size_t k = solveSet.size();
    while (true) {
        if (k > 0) {
            RatMatrix a = RatMatrix::identity(k), b(k, 1);
            for (std::size_t i = 0; i < k; ++i) {
                b.at(i, 0) = 1;
                for (const Transition& t : m.states[solveSet[i]].actions[policy.choice[solveSet[i]]].branches)
                    if (pos[t.to] >= 0) a.at(i, pos[t.to]) -= t.prob;
            }
            RatMatrix sol = a.solve(b);
            for (std::size_t i = 0; i < k; ++i) x[solveSet[i]] = sol.at(i, 0);
        }
        bool improved = false;
        for (int s : solveSet) {
            for (int a : admissible[s]) {
                Rat q(1);
                for (const Transition& t : m.states[s].actions[a].branches) q += t.prob * x[t.to];
                if (q < x[s]) {
                    policy.choice[s] = a;
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) break;
    }
    return x;
}

}  // namespace

Rat min_expected_steps(const Mdp& m, int from, int to,
                       const std::optional<StepDiscipline>& discipline) {
    // Build the working MDP: either m itself or its consecutive-visit copy
    // construction in which the forced policy takes over after `copies`
    // consecutive free-state visits.
    Mdp work;
    std::vector<std::pair<int, int>> info;  // node -> (state, count)
    int start = -1;
    std::vector<int> targetNodes;
    if (!discipline) {
        work = m;
        start = from;
        targetNodes.push_back(to);
        info.clear();
    } else {
        const StepDiscipline& d = *discipline;
        std::map<std::pair<int, int>, int> index;
        std::deque<int> queue;
        auto count_of = [&](int state, int prevCount) {
            if (!d.freeStates.count(state)) return 0;
            return std::min(prevCount + 1, d.copies);
        };
        auto intern = [&](int state, int count) {
            auto [it, fresh] = index.try_emplace({state, count}, work.num_states());
            if (fresh) {
                work.add_state(m.states[state].id + "#" + std::to_string(count));
                info.push_back({state, count});
                queue.push_back(it->second);
            }
            return it->second;
        };
        start = intern(from, d.freeStates.count(from) ? 1 : 0);
        while (!queue.empty()) {
            int node = queue.front();
            queue.pop_front();
            auto [state, count] = info[node];
            bool forced = d.freeStates.count(state) && count >= d.copies;
            for (std::size_t a = 0; a < m.states[state].actions.size(); ++a) {
                if (forced && static_cast<int>(a) != d.forced.choice[state]) continue;
                const Action& src = m.states[state].actions[a];
                Action& act = work.add_action(node, src.name, src.weight);
                for (const Transition& t : src.branches)
                    act.branches.push_back(Transition{intern(t.to, count_of(t.to, count)), t.prob});
            }
        }
        for (int node = 0; node < work.num_states(); ++node)
            if (info[node].first == to) targetNodes.push_back(node);
        work.initial = start;
    }

    std::vector<char> isTarget(work.num_states(), 0);
    for (int t : targetNodes) isTarget[t] = 1;
    std::vector<char> inP1;
    if (from == to) {
        // Expected return time: one step, then the minimal hitting time.
        // The start node is itself a target node, so exclude it from the
        // target mask for the departure step choices below.
        std::vector<Rat> x = min_steps_values(work, isTarget, inP1);
        bool any = false;
        Rat best(0);
        const auto& actions = work.states[start].actions;
        for (const Action& a : actions) {
            bool ok = true;
            Rat q(1);
            for (const Transition& t : a.branches) {
                if (!isTarget[t.to] && !inP1[t.to]) ok = false;
                if (!isTarget[t.to]) q += t.prob * x[t.to];
            }
            if (!ok) continue;
            if (!any || q < best) best = q;
            any = true;
        }
        if (!any)
            throw Error("TargetNotAlmostSurelyReachable",
                        "no admissible scheduler returns almost surely");
        return best;
    }
    std::vector<Rat> x = min_steps_values(work, isTarget, inP1);
    if (!inP1[start])
        throw Error("TargetNotAlmostSurelyReachable",
                    "target not reachable with probability 1 from source");
    return x[start];
}

Mdp sspp_preprocess(const Mdp& m) {
    if (!m.weights_nonnegative())
        throw Error("NegativeWeight", "preprocessing needs non-negative weights");
    if (m.goal.empty()) throw Error("GoalUnreachable", "no goal state");

    // Merge all goal states into a single absorbing goal.
    Mdp merged;
    std::vector<int> map(m.num_states(), -1);
    for (int s = 0; s < m.num_states(); ++s)
        if (!m.is_goal(s)) map[s] = merged.add_state(m.states[s].id, m.states[s].labels);
    int goalIdx = merged.add_state(m.find_state("goal") >= 0 ? "goal*" : "goal");
    merged.goal.insert(goalIdx);
    merged.make_absorbing(goalIdx);
    for (int s : m.goal) map[s] = goalIdx;
    for (int s = 0; s < m.num_states(); ++s) {
        if (m.is_goal(s)) continue;
        for (const Action& a : m.states[s].actions) {
            Action& act = merged.add_action(map[s], a.name, a.weight);
            std::map<int, Rat> dist;
            for (const Transition& t : a.branches) dist[map[t.to]] += t.prob;
            for (const auto& [to, p] : dist) act.branches.push_back(Transition{to, p});
        }
    }
    merged.initial = map[m.initial];

    // Goal must be reachable from every state.
    {
        std::vector<std::vector<int>> preds(merged.num_states());
        for (int s = 0; s < merged.num_states(); ++s)
            for (const Action& a : merged.states[s].actions)
                for (const Transition& t : a.branches) preds[t.to].push_back(s);
        std::vector<char> seen(merged.num_states(), 0);
        std::deque<int> queue{goalIdx};
        seen[goalIdx] = 1;
        while (!queue.empty()) {
            int v = queue.front();
            queue.pop_front();
            for (int u : preds[v])
                if (!seen[u]) {
                    seen[u] = 1;
                    queue.push_back(u);
                }
        }
        for (int s = 0; s < merged.num_states(); ++s)
            if (!seen[s])
                throw Error("GoalUnreachable",
                            "goal unreachable from state '" + merged.states[s].id + "'");
    }

    // Collapse non-goal end components; positive weight inside one makes the
    // maximal expectation infinite.
    MecDecomposition mecs = mec_decompose(merged);
    std::vector<int> rep(merged.num_states());
    for (int s = 0; s < merged.num_states(); ++s) rep[s] = s;
    for (const Mec& mec : mecs.mecs) {
        if (mec.has_state(goalIdx)) continue;
        if (mec.positiveWeight)
            throw Error("UnboundedExpectation",
                        "positive-weight end component outside goal");
        for (int s : mec.states) rep[s] = mec.states[0];
    }
    Mdp out;
    std::vector<int> map2(merged.num_states(), -1);
    for (int s = 0; s < merged.num_states(); ++s)
        if (rep[s] == s) map2[s] = out.add_state(merged.states[s].id, merged.states[s].labels);
    for (int s = 0; s < merged.num_states(); ++s) map2[s] = map2[rep[s]];
    for (int s = 0; s < merged.num_states(); ++s) {
        int mecIdx = mecs.mecOf[s];
        bool inCollapsed = mecIdx >= 0 && !mecs.mecs[mecIdx].has_state(goalIdx) &&
                           !(s == goalIdx);
        for (std::size_t a = 0; a < merged.states[s].actions.size(); ++a) {
            if (inCollapsed) {
                // Skip actions retained inside the collapsed end component.
                const Mec& mec = mecs.mecs[mecIdx];
                std::size_t i = std::lower_bound(mec.states.begin(), mec.states.end(), s) -
                                mec.states.begin();
                if (std::find(mec.actions[i].begin(), mec.actions[i].end(),
                              static_cast<int>(a)) != mec.actions[i].end())
                    continue;
            }
            const Action& src = merged.states[s].actions[a];
            Action& act = out.add_action(map2[s], src.name, src.weight);
            std::map<int, Rat> dist;
            for (const Transition& t : src.branches) dist[map2[t.to]] += t.prob;
            for (const auto& [to, p] : dist) act.branches.push_back(Transition{to, p});
        }
    }
    out.initial = map2[merged.initial];
    out.goal.insert(map2[goalIdx]);
    // Drop states made unreachable by the collapse.
    {
        std::vector<int> reach = reachable_states(out);
        std::vector<char> seen(out.num_states(), 0);
        for (int s : reach) seen[s] = 1;
        Mdp trimmed;
        std::vector<int> map3(out.num_states(), -1);
        for (int s = 0; s < out.num_states(); ++s)
            if (seen[s]) map3[s] = trimmed.add_state(out.states[s].id, out.states[s].labels);
        for (int s = 0; s < out.num_states(); ++s) {
            if (!seen[s]) continue;
            for (const Action& a : out.states[s].actions) {
                Action& act = trimmed.add_action(map3[s], a.name, a.weight);
                for (const Transition& t : a.branches)
                    act.branches.push_back(Transition{map3[t.to], t.prob});
            }
        }
        trimmed.initial = map3[out.initial];
        for (int g : out.goal)
            if (seen[g]) trimmed.goal.insert(map3[g]);
        out = std::move(trimmed);
    }
    MecDecomposition check = mec_decompose(out);
    if (check.mecs.size() != 1 || check.mecs[0].states.size() != 1 ||
        !out.is_goal(check.mecs[0].states[0]))
        throw Error("InternalInvariant", "preprocessing left a non-goal end component");
    return out;
}

AcyclicResult acyclic_check(const Mdp& m) {
    const int n = m.num_states();
    AcyclicResult r;
    std::vector<char> trap(n, 0);
    for (int s = 0; s < n; ++s) trap[s] = m.is_trap(s) ? 1 : 0;
    std::vector<std::vector<int>> adj(n);
    std::vector<int> indeg(n, 0);
    for (int s = 0; s < n; ++s) {
        if (trap[s]) continue;
        std::set<int> succ;
        for (const Action& a : m.states[s].actions)
            for (const Transition& t : a.branches)
                if (!trap[t.to]) succ.insert(t.to);
        for (int t : succ) {
            adj[s].push_back(t);
            ++indeg[t];
        }
    }
    std::deque<int> queue;
    for (int s = 0; s < n; ++s)
        if (!trap[s] && indeg[s] == 0) queue.push_back(s);
    std::vector<char> done(n, 0);
    while (!queue.empty()) {
        int s = queue.front();
        queue.pop_front();
        done[s] = 1;
        r.order.push_back(s);
        for (int t : adj[s])
            if (--indeg[t] == 0) queue.push_back(t);
    }
    int remaining = 0;
    for (int s = 0; s < n; ++s)
        if (!trap[s] && !done[s]) ++remaining;
    if (remaining == 0) {
        r.acyclic = true;
        return r;
    }
    // Extract a concrete cycle among the leftover states by following
    // leftover successors until a repeat.
    r.order.clear();
    int cur = -1;
    for (int s = 0; s < n; ++s)
        if (!trap[s] && !done[s]) {
            cur = s;
            break;
        }
    std::vector<int> seenAt(n, -1);
    std::vector<int> path;
    while (seenAt[cur] < 0) {
        seenAt[cur] = static_cast<int>(path.size());
        path.push_back(cur);
        for (int t : adj[cur])
            if (!done[t]) {
                cur = t;
                break;
            }
    }
    r.cycle.assign(path.begin() + seenAt[cur], path.end());
    return r;
}

SaturationData wlf_saturation_point(const Mdp& m, const std::set<int>& goalSet,
                                    const std::set<int>& failSet) {
    if (!m.weights_nonnegative())
        throw Error("NegativeWeight", "saturation point needs non-negative weights");
    SaturationData d;
    d.W = m.max_abs_weight();
    ReachMaxData reach = max_reach_prob(m, goalSet, failSet);
    d.delta = reach.gapDelta;
    std::set<int> gf = goalSet;
    gf.insert(failSet.begin(), failSet.end());
    std::set<int> sPrime;
    for (int s = 0; s < m.num_states(); ++s)
        if (!gf.count(s)) sPrime.insert(s);
    d.sPrime = static_cast<int>(sPrime.size());
    StepDiscipline disc{sPrime, reach.witness, d.sPrime};
    d.e = 0;
    for (int t : gf)
        for (int s : gf) {
            try {
                Rat v = min_expected_steps(m, t, s, disc);
                if (v > d.e) d.e = v;
            } catch (const Error& err) {
                if (err.code() != "TargetNotAlmostSurelyReachable") throw;
            }
        }
    Rat k1 = Rat(d.W) * d.e / d.delta;
    Int k2 = d.W * Int(d.sPrime + 1);
    d.K = rat_ceil(k1);
    if (k2 > d.K) d.K = k2;
    return d;
}

}  // namespace mdpsat
