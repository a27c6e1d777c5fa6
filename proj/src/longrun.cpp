#include "mdpsat/longrun.hpp"

#include <algorithm>
#include <deque>

#include "mdpsat/matrix.hpp"

namespace mdpsat {

namespace {

Mdp apply_sets(const Mdp& m, const LongRunSpec& spec) {
    for (int s : spec.goalSet)
        if (spec.failSet.count(s))
            throw Error("MalformedDocument", "goal and fail sets overlap");
    Mdp out = m;
    out.goal = spec.goalSet;
    out.fail = spec.failSet;
    return out;
}

void require_mecs_touch(const Mdp& m, const MecDecomposition& d) {
    for (const Mec& mec : d.mecs) {
        bool touches = false;
        for (int s : mec.states)
            if (m.is_trap(s)) touches = true;
        if (!touches)
            throw Error("SpecMecViolation", "an end component avoids Goal and Fail");
    }
}

ChainRows mp_policy_rows(const MeanPayoffMdp& m, const std::vector<int>& choice) {
    ChainRows rows(m.states.size());
    for (std::size_t s = 0; s < m.states.size(); ++s)
        rows[s] = m.states[s].actions[choice[s]].branches;
    return rows;
}

// Exact gain/bias of a fixed policy: class gains from stationary
// distributions, transient gains by absorption, bias from (I - P)h = r - g
// with the lowest node of every recurrent class anchored at h = 0.
struct MpEval {
    std::vector<Rat> g, h;
};

MpEval mp_evaluate(const MeanPayoffMdp& m, const std::vector<int>& choice) {
    const int n = static_cast<int>(m.states.size());
    ChainRows rows = mp_policy_rows(m, choice);
    std::vector<Rat> r(n);
    for (int v = 0; v < n; ++v) r[v] = m.states[v].actions[choice[v]].reward;
    std::vector<std::vector<int>> bsccs = chain_bsccs(rows);
    MpEval eval;
    eval.g.assign(n, Rat(0));
    std::vector<char> recurrent(n, 0);
    for (const auto& bscc : bsccs) {
        std::vector<Rat> pi = chain_steady_state(rows, bscc);
        Rat classGain(0);
        for (int v : bscc) classGain += pi[v] * r[v];
        for (int v : bscc) {
            eval.g[v] = classGain;
            recurrent[v] = 1;
        }
    }
    std::vector<int> transient, pos(n, -1);
    for (int v = 0; v < n; ++v)
        if (!recurrent[v]) {
            pos[v] = static_cast<int>(transient.size());
            transient.push_back(v);
        }
    if (!transient.empty()) {
        const std::size_t k = transient.size();
        RatMatrix a = RatMatrix::identity(k), b(k, 1);
        for (std::size_t i = 0; i < k; ++i)
            for (const auto& [u, p] : rows[transient[i]]) {
                if (recurrent[u])
                    b.at(i, 0) += p * eval.g[u];
                else
                    a.at(i, pos[u]) -= p;
            }
        RatMatrix sol = a.solve(b);
        for (std::size_t i = 0; i < k; ++i) eval.g[transient[i]] = sol.at(i, 0);
    }
    RatMatrix a(n, n), b(n, 1);
    for (int v = 0; v < n; ++v) {
        a.at(v, v) += 1;
        for (const auto& [u, p] : rows[v]) a.at(v, u) -= p;
        b.at(v, 0) = r[v] - eval.g[v];
    }
    for (const auto& bscc : bsccs) {
        int v0 = bscc[0];
        for (int u = 0; u < n; ++u) a.at(v0, u) = 0;
        a.at(v0, v0) = 1;
        b.at(v0, 0) = 0;
    }
    RatMatrix sol = a.solve(b);
    eval.h.assign(n, Rat(0));
    for (int v = 0; v < n; ++v) eval.h[v] = sol.at(v, 0);
    return eval;
}

}  // namespace

MeanPayoffResult mean_payoff_max(const MeanPayoffMdp& m) {
    const int n = static_cast<int>(m.states.size());
    for (const auto& s : m.states)
        if (s.actions.empty()) throw Error("InternalInvariant", "state without actions");
    std::vector<int> choice(n, 0);
    MpEval eval;
    for (long iteration = 0;; ++iteration) {
        if (iteration > 100000) throw Error("InternalInvariant", "policy iteration diverged");
        eval = mp_evaluate(m, choice);
        bool improved = false;
        for (int s = 0; s < n; ++s) {
            const auto& actions = m.states[s].actions;
            int cur = choice[s];
            bool switched = false;
            for (std::size_t a = 0; a < actions.size() && !switched; ++a) {
                if (static_cast<int>(a) == cur) continue;
                Rat ga(0);
                for (const auto& [u, p] : actions[a].branches) ga += p * eval.g[u];
                if (ga > eval.g[s]) {
                    choice[s] = static_cast<int>(a);
                    switched = improved = true;
                }
            }
            if (switched) continue;
            Rat qc = actions[cur].reward;
            for (const auto& [u, p] : actions[cur].branches) qc += p * eval.h[u];
            for (std::size_t a = 0; a < actions.size(); ++a) {
                if (static_cast<int>(a) == cur) continue;
                Rat ga(0), qa = actions[a].reward;
                for (const auto& [u, p] : actions[a].branches) {
                    ga += p * eval.g[u];
                    qa += p * eval.h[u];
                }
                // Bias improvement only among gain-conserving actions.
                if (ga == eval.g[s] && qa > qc) {
                    choice[s] = static_cast<int>(a);
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) break;
    }
    MeanPayoffResult result;
    result.gains = eval.g;
    result.bias = eval.h;
    result.gain = eval.g[m.initial];
    result.witness = MemorylessPolicy(n);
    result.witness.choice = choice;
    return result;
}

FmkProduct fmk_product(const Mdp& m, const LongRunSpec& spec, const Int& K) {
    Mdp mm = apply_sets(m, spec);
    if (!mm.weights_nonnegative())
        throw Error("NegativeWeight", "long-run frequencies need weights >= 0");
    if (K < 0) throw Error("NegativeWeight", "cap must be non-negative");
    require_mecs_touch(mm, mec_decompose(mm));
    FmkProduct prod;
    prod.K = K;
    prod.reach = max_reach_prob(mm, mm.goal, mm.fail);
    std::map<std::pair<int, Int>, int> index;
    std::deque<int> queue;
    auto intern = [&](int state, const Int& w) {
        auto [it, fresh] = index.try_emplace({state, w}, static_cast<int>(prod.info.size()));
        if (fresh) {
            prod.info.push_back({state, w});
            prod.mp.states.emplace_back();
            prod.isGF.push_back(mm.is_trap(state) ? 1 : 0);
            prod.saturated.push_back(!mm.is_trap(state) && w == K ? 1 : 0);
            prod.origAction.emplace_back();
            queue.push_back(it->second);
        }
        return it->second;
    };
    prod.mp.initial = intern(mm.initial, 0);
    while (!queue.empty()) {
        int node = queue.front();
        queue.pop_front();
        auto [state, w] = prod.info[node];
        std::vector<int> enabled;
        if (!mm.is_trap(state) && w == K)
            enabled.assign(prod.reach.actMax[state].begin(), prod.reach.actMax[state].end());
        else
            for (std::size_t a = 0; a < mm.states[state].actions.size(); ++a)
                enabled.push_back(static_cast<int>(a));
        for (int a : enabled) {
            const Action& act = mm.states[state].actions[a];
            MeanPayoffMdp::MpAction pa;
            if (mm.is_trap(state)) {
                // A step taken at a Goal state is counted in full right away;
                // at a Fail state it is lost. Either way the next segment
                // starts empty.
                pa.reward = mm.is_goal(state) ? Rat(act.weight) : Rat(0);
                for (const Transition& t : act.branches)
                    pa.branches.push_back({intern(t.to, 0), t.prob});
            } else {
                pa.reward = 0;
                Int total = w + act.weight;
                for (const Transition& t : act.branches) {
                    if (mm.is_goal(t.to)) {
                        // The whole segment resolves to Goal: grant it,
                        // untruncated at the entry step.
                        pa.reward += t.prob * Rat(total);
                        pa.branches.push_back({intern(t.to, 0), t.prob});
                    } else if (mm.is_fail(t.to)) {
                        pa.branches.push_back({intern(t.to, 0), t.prob});
                    } else {
                        // Weight above the cap cannot be deferred (the mode
                        // saturates), so its expected counted share is paid
                        // now: the continuation is reachability-optimal.
                        if (total > K)
                            pa.reward += t.prob * Rat(total - K) * prod.reach.pmax[t.to];
                        pa.branches.push_back({intern(t.to, total > K ? K : total), t.prob});
                    }
                }
            }
            prod.mp.states[node].actions.push_back(std::move(pa));
            prod.origAction[node].push_back(a);
        }
    }
    return prod;
}

namespace {

Mdp mp_to_mdp(const MeanPayoffMdp& mp) {
    Mdp m;
    for (std::size_t v = 0; v < mp.states.size(); ++v) m.add_state("n" + std::to_string(v));
    m.initial = mp.initial;
    for (std::size_t v = 0; v < mp.states.size(); ++v)
        for (std::size_t a = 0; a < mp.states[v].actions.size(); ++a) {
            Action& act = m.add_action(static_cast<int>(v), "a" + std::to_string(a), 0);
            for (const auto& [u, p] : mp.states[v].actions[a].branches)
                act.branches.push_back(Transition{u, p});
        }
    return m;
}

std::vector<char> reachable_under(const ChainRows& rows, int start) {
    std::vector<char> seen(rows.size(), 0);
    std::deque<int> queue{start};
    seen[start] = 1;
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (const auto& [u, p] : rows[v])
            if (!seen[u]) {
                seen[u] = 1;
                queue.push_back(u);
            }
    }
    return seen;
}

// A recurrent class of a product policy either contains a Goal/Fail node
// (its deferred rewards are exact), or lies in the saturated layer, or is a
// zero-weight fixed-mode cycle. A saturated class whose states can still
// resolve to Goal (positive reachability) earns phantom surplus reward that
// no cap-respecting scheduler realizes; such classes invalidate the plain
// optimum and force re-solving under explicit saturated selections.
bool phantom_reachable(const FmkProduct& prod, const std::vector<int>& choice,
                       const std::vector<Rat>& gains) {
    ChainRows rows = mp_policy_rows(prod.mp, choice);
    std::vector<char> seen = reachable_under(rows, prod.mp.initial);
    for (const auto& bscc : chain_bsccs(rows)) {
        bool reachable = false, hasGF = false;
        for (int v : bscc) {
            if (seen[v]) reachable = true;
            if (prod.isGF[v]) hasGF = true;
        }
        if (reachable && !hasGF && gains[bscc[0]] > 0) return true;
    }
    return false;
}

// A saturated selection attains the reachability optimum iff no selection-
// closed recurrent class inside the saturated layer retains positive
// reachability: conserving actions plus almost-sure resolution imply
// attainment, and a positive-reachability trap contradicts it.
bool selection_attaining(const FmkProduct& prod, const std::vector<int>& satNodes,
                         const std::vector<int>& pick) {
    const int k = static_cast<int>(satNodes.size());
    std::vector<int> pos(prod.mp.states.size(), -1);
    for (int i = 0; i < k; ++i) pos[satNodes[i]] = i;
    ChainRows rows(k + 1);
    rows[k].push_back({k, Rat(1)});  // exit node
    for (int i = 0; i < k; ++i) {
        const auto& act = prod.mp.states[satNodes[i]].actions[pick[i]];
        for (const auto& [u, p] : act.branches)
            rows[i].push_back({pos[u] >= 0 ? pos[u] : k, p});
    }
    for (const auto& bscc : chain_bsccs(rows)) {
        if (std::find(bscc.begin(), bscc.end(), k) != bscc.end()) continue;
        for (int i : bscc)
            if (prod.reach.pmax[prod.info[satNodes[i]].first] > 0) return false;
    }
    return true;
}

struct ProdSolve {
    Rat gain;
    std::vector<int> choice;  // product action index per node
};

ProdSolve optimize_product(const FmkProduct& prod) {
    MeanPayoffResult res = mean_payoff_max(prod.mp);
    if (!phantom_reachable(prod, res.witness.choice, res.gains))
        return {res.gains[prod.mp.initial], res.witness.choice};
    // Re-solve with the saturated layer pinned to each attaining selection.
    std::vector<int> satNodes;
    for (std::size_t v = 0; v < prod.mp.states.size(); ++v)
        if (prod.saturated[v]) satNodes.push_back(static_cast<int>(v));
    const int k = static_cast<int>(satNodes.size());
    std::vector<int> pick(k, 0);
    bool found = false;
    ProdSolve best;
    while (true) {
        if (selection_attaining(prod, satNodes, pick)) {
            MeanPayoffMdp restricted = prod.mp;
            for (int i = 0; i < k; ++i)
                restricted.states[satNodes[i]].actions = {
                    prod.mp.states[satNodes[i]].actions[pick[i]]};
            MeanPayoffResult r = mean_payoff_max(restricted);
            std::vector<int> choice = r.witness.choice;
            for (int i = 0; i < k; ++i) choice[satNodes[i]] = pick[i];
            if (!found || r.gains[prod.mp.initial] > best.gain) {
                best = {r.gains[prod.mp.initial], choice};
                found = true;
            }
        }
        int i = 0;
        while (i < k && ++pick[i] == static_cast<int>(prod.mp.states[satNodes[i]].actions.size()))
            pick[i++] = 0;
        if (i == k) break;
    }
    if (!found) throw Error("InternalInvariant", "no attaining saturated selection");
    return best;
}

// Rewires the optimal product policy so that its chain from the initial node
// is absorbed almost surely into a single recurrent class containing a
// Goal/Fail node (the per-scheduler evaluation needs exactly that shape).
std::vector<int> normalize_policy(const FmkProduct& prod, const ProdSolve& solved) {
    ChainRows rows = mp_policy_rows(prod.mp, solved.choice);
    std::vector<char> seen = reachable_under(rows, prod.mp.initial);
    std::vector<int> classNodes;
    std::vector<int> classChoice = solved.choice;
    for (const auto& bscc : chain_bsccs(rows)) {
        bool reachable = false, hasGF = false;
        for (int v : bscc) {
            if (seen[v]) reachable = true;
            if (prod.isGF[v]) hasGF = true;
        }
        if (reachable && hasGF) {
            classNodes = bscc;
            break;
        }
    }
    Mdp skeleton = mp_to_mdp(prod.mp);
    if (classNodes.empty()) {
        // Gain-zero case: fall back to a policy driving into Goal∪Fail
        // almost surely; its recurrent classes resolve and earn exactly 0.
        std::set<int> gfNodes;
        for (std::size_t v = 0; v < prod.isGF.size(); ++v)
            if (prod.isGF[v]) gfNodes.insert(static_cast<int>(v));
        if (gfNodes.empty()) return solved.choice;
        Prob1Attractor toGF = prob1_max_attractor(skeleton, gfNodes);
        if (!toGF.inP1[prod.mp.initial]) return solved.choice;
        ChainRows gfRows = mp_policy_rows(prod.mp, toGF.attractor.choice);
        std::vector<char> gfSeen = reachable_under(gfRows, prod.mp.initial);
        for (const auto& bscc : chain_bsccs(gfRows)) {
            bool reachable = false;
            for (int v : bscc)
                if (gfSeen[v]) reachable = true;
            if (reachable) {
                classNodes = bscc;
                break;
            }
        }
        if (classNodes.empty()) return solved.choice;
        classChoice = toGF.attractor.choice;
    }
    std::set<int> classSet(classNodes.begin(), classNodes.end());
    Prob1Attractor att = prob1_max_attractor(skeleton, classSet);
    if (!att.inP1[prod.mp.initial]) return solved.choice;
    std::vector<int> out = solved.choice;
    for (std::size_t v = 0; v < out.size(); ++v) {
        if (classSet.count(static_cast<int>(v)))
            out[v] = classChoice[v];
        else if (att.inP1[v])
            out[v] = att.attractor.choice[v];
    }
    return out;
}

// Everything wlf_max needs per end component.
struct MecSolve {
    Mdp sub;
    std::vector<int> toGlobal;                 // local state -> global state
    std::map<int, int> toLocal;                // global -> local
    std::vector<std::vector<int>> actionMap;   // local state, local action -> global action
    SaturationData sat;
    FmkProduct prod;
    std::map<std::pair<int, Int>, int> prodIndex;
    std::vector<int> policy;  // normalized product policy
    Rat gain;
};

MecSolve solve_mec(const Mdp& mm, const Mec& mec, int preferredInitial) {
    MecSolve ms;
    ms.toGlobal = mec.states;
    for (std::size_t i = 0; i < mec.states.size(); ++i)
        ms.toLocal[mec.states[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < mec.states.size(); ++i) {
        int g = mec.states[i];
        ms.sub.add_state(mm.states[g].id, mm.states[g].labels);
        ms.actionMap.emplace_back();
        if (mm.is_goal(g)) ms.sub.goal.insert(static_cast<int>(i));
        if (mm.is_fail(g)) ms.sub.fail.insert(static_cast<int>(i));
    }
    for (std::size_t i = 0; i < mec.states.size(); ++i) {
        int g = mec.states[i];
        for (int a : mec.actions[i]) {
            const Action& src = mm.states[g].actions[a];
            Action& act = ms.sub.add_action(static_cast<int>(i), src.name, src.weight);
            for (const Transition& t : src.branches)
                act.branches.push_back(Transition{ms.toLocal.at(t.to), t.prob});
            ms.actionMap[i].push_back(a);
        }
    }
    ms.sub.initial = preferredInitial >= 0 && ms.toLocal.count(preferredInitial)
                         ? ms.toLocal.at(preferredInitial)
                         : 0;
    ms.sat = wlf_saturation_point(ms.sub, ms.sub.goal, ms.sub.fail);
    ms.prod = fmk_product(ms.sub, LongRunSpec{ms.sub.goal, ms.sub.fail}, ms.sat.K);
    ProdSolve solved = optimize_product(ms.prod);
    ms.gain = solved.gain;
    ms.policy = normalize_policy(ms.prod, solved);
    for (std::size_t v = 0; v < ms.prod.info.size(); ++v)
        ms.prodIndex[ms.prod.info[v]] = static_cast<int>(v);
    return ms;
}

}  // namespace

WlfResult wlf_max(const Mdp& m, const LongRunSpec& spec) {
    Mdp mm = apply_sets(m, spec);
    if (!mm.weights_nonnegative())
        throw Error("NegativeWeight", "long-run frequencies need weights >= 0");
    MecDecomposition d = mec_decompose(mm);
    require_mecs_touch(mm, d);
    WlfResult result;
    std::vector<MecSolve> solves;
    for (const Mec& mec : d.mecs) {
        solves.push_back(solve_mec(mm, mec, mm.initial));
        result.gainPerMec[static_cast<int>(solves.size()) - 1] = solves.back().gain;
    }
    // Compose across end components: staying in component i is worth its
    // gain, so the overall optimum is the best almost-surely attainable
    // mixture — a plain mean-payoff problem over the original states.
    MeanPayoffMdp aux;
    aux.initial = mm.initial;
    for (int s = 0; s < mm.num_states(); ++s) {
        aux.states.emplace_back();
        for (const Action& act : mm.states[s].actions) {
            MeanPayoffMdp::MpAction pa;
            pa.reward = 0;
            for (const Transition& t : act.branches) pa.branches.push_back({t.to, t.prob});
            aux.states[s].actions.push_back(std::move(pa));
        }
        if (d.mecOf[s] >= 0) {
            MeanPayoffMdp::MpAction stay;
            stay.reward = solves[d.mecOf[s]].gain;
            stay.branches.push_back({s, Rat(1)});
            aux.states[s].actions.push_back(std::move(stay));
        }
    }
    result.value = mean_payoff_max(aux).gains[mm.initial];
    int best = 0;
    for (std::size_t i = 1; i < solves.size(); ++i)
        if (solves[i].gain > solves[best].gain) best = static_cast<int>(i);
    const MecSolve& ms = solves[best];
    result.saturation = ms.sat;
    // Assemble the weight-memory witness: steer into the chosen component,
    // then follow its normalized product policy.
    std::set<int> mecStates(ms.toGlobal.begin(), ms.toGlobal.end());
    Prob1Attractor steer = prob1_max_attractor(mm, mecStates);
    MemorylessPolicy fallbackSteer;
    if (!steer.inP1[mm.initial])
        fallbackSteer = max_reach_prob(mm, mecStates, {}).witness;
    WeightMemoryScheduler& w = result.witness;
    w.cap = ms.sat.K;
    w.resetOnGoalFail = true;
    w.segmentMode = true;
    std::deque<std::pair<int, Int>> queue{{mm.initial, Int(0)}};
    std::set<std::pair<int, Int>> visited{{mm.initial, Int(0)}};
    while (!queue.empty()) {
        auto [s, mode] = queue.front();
        queue.pop_front();
        int action;
        auto local = ms.toLocal.find(s);
        if (local != ms.toLocal.end()) {
            int l = local->second;
            auto node = ms.prodIndex.find({l, mode});
            if (node == ms.prodIndex.end()) node = ms.prodIndex.find({l, ms.sat.K});
            if (node == ms.prodIndex.end()) node = ms.prodIndex.find({l, Int(0)});
            if (node != ms.prodIndex.end()) {
                int localAction = ms.prod.origAction[node->second][ms.policy[node->second]];
                action = ms.actionMap[l][localAction];
            } else {
                action = ms.actionMap[l][0];
            }
        } else {
            action = steer.inP1[s] ? steer.attractor.choice[s] : fallbackSteer.choice[s];
            if (action < 0) action = 0;
        }
        w.choice[{s, mode}] = action;
        const Action& act = mm.states[s].actions[action];
        for (const Transition& t : act.branches) {
            Int next = w.next_mode(mm, s, mode, act.weight, t.to);
            if (visited.insert({t.to, next}).second) queue.push_back({t.to, next});
        }
    }
    return result;
}

namespace {

Rat chain_wlf(const Mdp& mm, const InducedChain& chain) {
    std::vector<std::vector<int>> bsccs = chain_bsccs(chain.rows);
    if (bsccs.size() != 1)
        throw Error("MultipleBsccs", "induced chain has " + std::to_string(bsccs.size()) +
                                         " recurrent classes");
    const auto& bscc = bsccs[0];
    const int n = chain.num_nodes();
    std::vector<char> goalMask(n, 0), failMask(n, 0);
    bool touches = false;
    for (int v = 0; v < n; ++v) {
        goalMask[v] = mm.is_goal(chain.nodes[v].state) ? 1 : 0;
        failMask[v] = mm.is_fail(chain.nodes[v].state) ? 1 : 0;
    }
    for (int v : bscc)
        if (goalMask[v] || failMask[v]) touches = true;
    if (!touches)
        throw Error("BsccAvoidsGoalFail", "recurrent class avoids Goal and Fail");
    std::vector<Rat> p = chain_until_prob(chain.rows, goalMask, failMask);
    std::vector<Rat> x = chain_steady_state(chain.rows, bscc);
    Rat value(0);
    for (int v : bscc) value += Rat(chain.stepWeight[v]) * p[v] * x[v];
    return value;
}

Rat chain_lrp_nfa(const Mdp& m, const Nfa& a, const InducedChain& chain) {
    std::vector<std::vector<int>> bsccs = chain_bsccs(chain.rows);
    if (bsccs.size() != 1)
        throw Error("MultipleBsccs", "induced chain has " + std::to_string(bsccs.size()) +
                                         " recurrent classes");
    const auto& bscc = bsccs[0];
    // Product of the recurrent chain with the subset automaton; acceptance
    // and rejection (empty subset) are absorbing.
    std::map<std::pair<int, std::set<int>>, int> index;
    ChainRows rows;
    std::vector<std::pair<int, std::set<int>>> nodes;
    std::deque<int> queue;
    auto intern = [&](int v, const std::set<int>& q) {
        auto [it, fresh] = index.try_emplace({v, q}, static_cast<int>(nodes.size()));
        if (fresh) {
            nodes.push_back({v, q});
            rows.emplace_back();
            queue.push_back(it->second);
        }
        return it->second;
    };
    const int ACC = 0, REJ = 1;
    nodes.push_back({-1, {}});
    rows.push_back({{ACC, Rat(1)}});
    nodes.push_back({-1, {}});
    rows.push_back({{REJ, Rat(1)}});
    std::map<int, int> startOf;
    for (int v : bscc) startOf[v] = intern(v, {a.initial});
    while (!queue.empty()) {
        int node = queue.front();
        queue.pop_front();
        auto [v, q] = nodes[node];
        const auto& labels = m.states[chain.nodes[v].state].labels;
        std::set<int> next = a.step(q, std::set<std::string>(labels.begin(), labels.end()));
        if (a.accepts_set(next)) {
            rows[node].push_back({ACC, Rat(1)});
        } else if (next.empty()) {
            rows[node].push_back({REJ, Rat(1)});
        } else {
            // intern() may grow `rows`, so collect the row before storing it.
            std::vector<std::pair<int, Rat>> row;
            for (const auto& [u, p] : chain.rows[v]) row.push_back({intern(u, next), p});
            rows[node] = std::move(row);
        }
    }
    const int pn = static_cast<int>(rows.size());
    std::vector<char> accMask(pn, 0), doneMask(pn, 0);
    accMask[ACC] = doneMask[ACC] = doneMask[REJ] = 1;
    std::vector<Rat> resolve = chain_until_prob(rows, doneMask, std::vector<char>(pn, 0));
    for (const auto& [v, start] : startOf)
        if (resolve[start] != 1)
            throw Error("AcceptanceUnresolved",
                        "automaton acceptance is not resolved almost surely");
    std::vector<Rat> pacc = chain_until_prob(rows, accMask, std::vector<char>(pn, 0));
    std::vector<Rat> x = chain_steady_state(chain.rows, bscc);
    Rat value(0);
    for (int v : bscc) value += x[v] * pacc[startOf.at(v)];
    return value;
}

}  // namespace

Rat evaluate_fm_wlf(const Mdp& m, const LongRunSpec& spec, const WeightMemoryScheduler& s) {
    Mdp mm = apply_sets(m, spec);
    return chain_wlf(mm, induce_chain(mm, s));
}

Rat evaluate_fm_wlf(const Mdp& m, const LongRunSpec& spec, const MemorylessPolicy& s) {
    Mdp mm = apply_sets(m, spec);
    return chain_wlf(mm, induce_chain(mm, s));
}

Rat evaluate_fm_lrp_nfa(const Mdp& m, const Nfa& a, const WeightMemoryScheduler& s) {
    return chain_lrp_nfa(m, a, induce_chain(m, s));
}

Rat evaluate_fm_lrp_nfa(const Mdp& m, const Nfa& a, const MemorylessPolicy& s) {
    return chain_lrp_nfa(m, a, induce_chain(m, s));
}

FltlReport fltl_qualitative(const Mdp& m, const FreqQuery& q) {
    Mdp mm = m;
    mm.goal.clear();
    mm.fail.clear();
    for (int s = 0; s < mm.num_states(); ++s) {
        for (Action& act : mm.states[s].actions) act.weight = 1;
        const auto& labels = mm.states[s].labels;
        bool hasA = std::find(labels.begin(), labels.end(), q.a) != labels.end();
        bool hasB = std::find(labels.begin(), labels.end(), q.b) != labels.end();
        if (hasB)
            mm.goal.insert(s);
        else if (!hasA)
            mm.fail.insert(s);
    }
    MecDecomposition d = mec_decompose(mm);
    FltlReport report;
    std::set<int> passing;
    for (std::size_t i = 0; i < d.mecs.size(); ++i) {
        const Mec& mec = d.mecs[i];
        bool touches = false;
        for (int s : mec.states)
            if (mm.is_trap(s)) touches = true;
        // Components never leaving "a-only" states satisfy no suffix at all.
        Rat gain = touches ? solve_mec(mm, mec, -1).gain : Rat(0);
        report.perMecGain[static_cast<int>(i)] = gain;
        if (gain > q.theta)
            for (int s : mec.states) passing.insert(s);
    }
    if (!passing.empty()) {
        Prob1Attractor att = prob1_max_attractor(mm, passing);
        report.holds = att.inP1[mm.initial] != 0;
    }
    return report;
}

}  // namespace mdpsat
