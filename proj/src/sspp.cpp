#include "mdpsat/sspp.hpp"

#include <algorithm>
#include <deque>
#include <map>

#include "mdpsat/matrix.hpp"

namespace mdpsat {

namespace {

void require_preprocessed(const Mdp& m) {
    MecDecomposition d = mec_decompose(m);
    for (const Mec& mec : d.mecs)
        if (mec.states.size() != 1 || !m.is_goal(mec.states[0]))
            throw Error("PreprocessNotApplied", "model has a non-goal end component");
}

}  // namespace

SsppResult classical_sspp(const Mdp& m, bool maximize) {
    require_preprocessed(m);
    const int n = m.num_states();
    std::vector<int> solveSet, pos(n, -1);
    for (int s = 0; s < n; ++s)
        if (!m.is_goal(s)) {
            pos[s] = static_cast<int>(solveSet.size());
            solveSet.push_back(s);
        }
    MemorylessPolicy policy(n);
    for (int s = 0; s < n; ++s) policy.choice[s] = 0;
    std::vector<Rat> x(n, Rat(0));
    const std::size_t k = solveSet.size();
    while (true) {
        if (k > 0) {
            RatMatrix a = RatMatrix::identity(k), b(k, 1);
            for (std::size_t i = 0; i < k; ++i) {
                const Action& act = m.states[solveSet[i]].actions[policy.choice[solveSet[i]]];
                b.at(i, 0) = Rat(act.weight);
                for (const Transition& t : act.branches)
                    if (pos[t.to] >= 0) a.at(i, pos[t.to]) -= t.prob;
            }
            RatMatrix sol = a.solve(b);
            for (std::size_t i = 0; i < k; ++i) x[solveSet[i]] = sol.at(i, 0);
        }
        bool improved = false;
        for (int s : solveSet) {
            for (std::size_t a = 0; a < m.states[s].actions.size(); ++a) {
                const Action& act = m.states[s].actions[a];
                Rat q(act.weight);
                for (const Transition& t : act.branches) q += t.prob * x[t.to];
                if (maximize ? q > x[s] : q < x[s]) {
                    policy.choice[s] = static_cast<int>(a);
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) break;
    }
    return SsppResult{x[m.initial], x, policy, maximize};
}

// ---- per-scheduler evaluation ----

Rat chain_goal_prob(const Mdp& m, const InducedChain& chain) {
    const int n = chain.num_nodes();
    std::vector<char> isGoal(n, 0);
    for (int v = 0; v < n; ++v) isGoal[v] = m.is_goal(chain.nodes[v].state) ? 1 : 0;
    return chain_until_prob(chain.rows, isGoal, std::vector<char>(n, 0))[chain.initial];
}

Rat chain_partial_expectation(const Mdp& m, const InducedChain& chain) {
    const int n = chain.num_nodes();
    std::vector<char> isGoal(n, 0);
    for (int v = 0; v < n; ++v) isGoal[v] = m.is_goal(chain.nodes[v].state) ? 1 : 0;
    std::vector<Rat> r = chain_until_prob(chain.rows, isGoal, std::vector<char>(n, 0));
    // x_v = sum_u P(v,u) (wgt_v * r_u + x_u) on nodes that may still reach
    // goal; the system is nonsingular because every such node is transient
    // with respect to absorption into goal or the zero-probability region.
    std::vector<int> solveSet, pos(n, -1);
    for (int v = 0; v < n; ++v)
        if (r[v] > 0 && !isGoal[v]) {
            pos[v] = static_cast<int>(solveSet.size());
            solveSet.push_back(v);
        }
    if (solveSet.empty()) return Rat(0);
    const std::size_t k = solveSet.size();
    RatMatrix a = RatMatrix::identity(k), b(k, 1);
    for (std::size_t i = 0; i < k; ++i) {
        int v = solveSet[i];
        Rat wgt(chain.stepWeight[v]);
        for (const auto& [u, p] : chain.rows[v]) {
            b.at(i, 0) += p * wgt * r[u];
            if (pos[u] >= 0) a.at(i, pos[u]) -= p;
        }
    }
    RatMatrix sol = a.solve(b);
    if (pos[chain.initial] < 0) return Rat(0);
    return sol.at(pos[chain.initial], 0);
}

Rat evaluate_pe(const Mdp& m, const WeightMemoryScheduler& s) {
    return chain_partial_expectation(m, induce_chain(m, s));
}
Rat evaluate_pe(const Mdp& m, const MemorylessPolicy& s) {
    return chain_partial_expectation(m, induce_chain(m, s));
}

namespace {

Rat evaluate_ce_chain(const Mdp& m, const InducedChain& chain) {
    Rat p = chain_goal_prob(m, chain);
    if (p == 0) throw Error("GoalProbabilityZero", "scheduler never reaches goal");
    return chain_partial_expectation(m, chain) / p;
}

}  // namespace

Rat evaluate_ce(const Mdp& m, const WeightMemoryScheduler& s) {
    return evaluate_ce_chain(m, induce_chain(m, s));
}
Rat evaluate_ce(const Mdp& m, const MemorylessPolicy& s) {
    return evaluate_ce_chain(m, induce_chain(m, s));
}

// ---- acyclic backward inductions ----

namespace {

// Forward enumeration of reachable (state, accumulated weight) nodes of an
// acyclic model; traps (goal/fail) are terminal.
struct WeightGraph {
    std::vector<std::pair<int, Int>> nodes;  // (state, accumulated weight)
    std::map<std::pair<int, Int>, int> index;
    int initial = 0;
};

WeightGraph enumerate_weight_nodes(const Mdp& m) {
    AcyclicResult acyclic = acyclic_check(m);
    if (!acyclic.acyclic) throw Error("NotAcyclic", "model has a cycle outside the traps");
    WeightGraph g;
    std::deque<int> queue;
    auto intern = [&](int state, const Int& w) {
        auto [it, fresh] = g.index.try_emplace({state, w}, static_cast<int>(g.nodes.size()));
        if (fresh) {
            g.nodes.push_back({state, w});
            queue.push_back(it->second);
        }
        return it->second;
    };
    g.initial = intern(m.initial, 0);
    while (!queue.empty()) {
        int node = queue.front();
        queue.pop_front();
        auto [state, w] = g.nodes[node];
        if (m.is_trap(state)) continue;
        for (const Action& a : m.states[state].actions)
            for (const Transition& t : a.branches) intern(t.to, w + a.weight);
    }
    return g;
}

// Topological processing order: children before parents. The enumeration is
// a DAG, so processing nodes in reverse BFS discovery order is not enough in
// general; do an explicit DFS post-order.
std::vector<int> dag_postorder(const Mdp& m, const WeightGraph& g) {
    std::vector<int> order;
    std::vector<char> done(g.nodes.size(), 0);
    struct Frame {
        int node;
        std::size_t child;
    };
    std::vector<std::vector<int>> children(g.nodes.size());
    for (std::size_t v = 0; v < g.nodes.size(); ++v) {
        auto [state, w] = g.nodes[v];
        if (m.is_trap(state)) continue;
        for (const Action& a : m.states[state].actions)
            for (const Transition& t : a.branches)
                children[v].push_back(g.index.at({t.to, w + a.weight}));
    }
    std::vector<Frame> stack{{g.initial, 0}};
    std::vector<char> onPath(g.nodes.size(), 0);
    onPath[g.initial] = 1;
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.child < children[f.node].size()) {
            int c = children[f.node][f.child++];
            if (!done[c] && !onPath[c]) {
                onPath[c] = 1;
                stack.push_back({c, 0});
            }
        } else {
            done[f.node] = 1;
            onPath[f.node] = 0;
            order.push_back(f.node);
            stack.pop_back();
        }
    }
    return order;
}

}  // namespace

PartialResult acyclic_partial_expectation(const Mdp& m, bool maximize) {
    WeightGraph g = enumerate_weight_nodes(m);
    std::vector<int> order = dag_postorder(m, g);
    std::vector<Rat> value(g.nodes.size(), Rat(0));
    PartialResult result;
    result.kind = "PE";
    result.maximize = maximize;
    result.witness.cap = -1;
    for (int v : order) {
        auto [state, w] = g.nodes[v];
        if (m.is_goal(state)) {
            value[v] = Rat(w);
            continue;
        }
        if (m.is_fail(state) || m.states[state].actions.empty()) {
            value[v] = 0;
            continue;
        }
        bool first = true;
        for (std::size_t a = 0; a < m.states[state].actions.size(); ++a) {
            const Action& act = m.states[state].actions[a];
            Rat q(0);
            for (const Transition& t : act.branches)
                q += t.prob * value[g.index.at({t.to, w + act.weight})];
            if (first || (maximize ? q > value[v] : q < value[v])) {
                value[v] = q;
                result.witness.choice[{state, w}] = static_cast<int>(a);
                first = false;
            }
        }
    }
    result.value = value[g.initial];
    return result;
}

namespace {

struct ParetoPoint {
    Rat p, e;  // (reach probability, partial expectation)
    bool operator<(const ParetoPoint& o) const {
        return p < o.p || (p == o.p && e < o.e);
    }
    bool operator==(const ParetoPoint& o) const = default;
};

// Full convex hull (all extreme points), Andrew monotone chain.
std::vector<ParetoPoint> convex_hull(std::vector<ParetoPoint> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() <= 2) return pts;
    // The explicit return type forces evaluation; a deduced return type would
    // be a GMP expression template referencing dead temporaries.
    auto cross = [](const ParetoPoint& o, const ParetoPoint& a, const ParetoPoint& b) -> Rat {
        return (a.p - o.p) * (b.e - o.e) - (a.e - o.e) * (b.p - o.p);
    };
    std::vector<ParetoPoint> hull;
    for (const ParetoPoint& pt : pts) {  // lower chain
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), pt) <= 0)
            hull.pop_back();
        hull.push_back(pt);
    }
    std::size_t lower = hull.size() + 1;
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) {  // upper chain
        while (hull.size() >= lower && cross(hull[hull.size() - 2], hull.back(), *it) <= 0)
            hull.pop_back();
        hull.push_back(*it);
    }
    hull.pop_back();  // first point repeated
    return hull;
}

std::vector<ParetoPoint> scale_set(const std::vector<ParetoPoint>& s, const Rat& c) {
    std::vector<ParetoPoint> out;
    for (const ParetoPoint& v : s) out.push_back({v.p * c, v.e * c});
    return out;
}

std::vector<ParetoPoint> minkowski_sum(const std::vector<ParetoPoint>& a,
                                       const std::vector<ParetoPoint>& b) {
    std::vector<ParetoPoint> out;
    for (const ParetoPoint& x : a)
        for (const ParetoPoint& y : b) out.push_back({x.p + y.p, x.e + y.e});
    return convex_hull(out);
}

}  // namespace

PartialResult acyclic_conditional_expectation(const Mdp& m, bool maximize) {
    WeightGraph g = enumerate_weight_nodes(m);
    std::vector<int> order = dag_postorder(m, g);
    if (!maximize) {
        std::vector<Rat> pmin = min_reach_prob(m, m.goal);
        if (pmin[m.initial] == 0)
            throw Error("GoalUnreachable",
                        "some scheduler reaches goal with probability 0");
    }
    // Achievable (probability, partial expectation) extreme points per node.
    std::vector<std::vector<ParetoPoint>> sets(g.nodes.size());
    for (int v : order) {
        auto [state, w] = g.nodes[v];
        if (m.is_goal(state)) {
            sets[v] = {{Rat(1), Rat(w)}};
            continue;
        }
        if (m.is_fail(state) || m.states[state].actions.empty()) {
            sets[v] = {{Rat(0), Rat(0)}};
            continue;
        }
        std::vector<ParetoPoint> all;
        for (const Action& act : m.states[state].actions) {
            std::vector<ParetoPoint> combo{{Rat(0), Rat(0)}};
            for (const Transition& t : act.branches)
                combo = minkowski_sum(
                    combo, scale_set(sets[g.index.at({t.to, w + act.weight})], t.prob));
            all.insert(all.end(), combo.begin(), combo.end());
        }
        sets[v] = convex_hull(all);
    }
    bool found = false;
    Rat best;
    for (const ParetoPoint& v : sets[g.initial]) {
        if (v.p == 0) continue;
        Rat ce = v.e / v.p;
        if (!found || (maximize ? ce > best : ce < best)) {
            best = ce;
            found = true;
        }
    }
    if (!found) throw Error("GoalUnreachable", "no scheduler reaches goal");

    // Witness pass: optimize the linear functional e - best*p (zero at the
    // optimum), preferring larger reach probability on ties so the ratio is
    // actually attained.
    PartialResult result;
    result.kind = "CE";
    result.maximize = maximize;
    result.witness.cap = -1;
    std::vector<Rat> fval(g.nodes.size()), pval(g.nodes.size()), eval(g.nodes.size());
    for (int v : order) {
        auto [state, w] = g.nodes[v];
        if (m.is_goal(state)) {
            pval[v] = 1;
            eval[v] = Rat(w);
        } else if (m.is_fail(state) || m.states[state].actions.empty()) {
            pval[v] = 0;
            eval[v] = 0;
        } else {
            bool first = true;
            for (std::size_t a = 0; a < m.states[state].actions.size(); ++a) {
                const Action& act = m.states[state].actions[a];
                Rat qp(0), qe(0);
                for (const Transition& t : act.branches) {
                    int c = g.index.at({t.to, w + act.weight});
                    qp += t.prob * pval[c];
                    qe += t.prob * eval[c];
                }
                Rat qf = qe - best * qp;
                bool better = first || (maximize ? qf > fval[v] : qf < fval[v]) ||
                              (qf == fval[v] && qp > pval[v]);
                if (better) {
                    fval[v] = qf;
                    pval[v] = qp;
                    eval[v] = qe;
                    result.witness.choice[{state, w}] = static_cast<int>(a);
                    first = false;
                }
            }
        }
        if (m.is_goal(state) || m.is_fail(state) || m.states[state].actions.empty())
            fval[v] = eval[v] - best * pval[v];
    }
    if (pval[g.initial] == 0 || eval[g.initial] / pval[g.initial] != best)
        throw Error("InternalInvariant", "conditional expectation witness mismatch");
    result.value = best;
    return result;
}

}  // namespace mdpsat
