#include "mdpsat/gadget.hpp"

#include <algorithm>
#include <deque>
#include <functional>

#include <json.hpp>

#include "mdpsat/graph.hpp"

namespace mdpsat {

using nlohmann::json;

namespace {

Int int_pow(int base, unsigned long e) {
    Int r;
    mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(base), e);
    return r;
}

// 1 / (2 k^{2(k-j)}), the per-level goal probability of the entry states.
Rat level_prob(int k, int j) {
    return Rat(1) / Rat(2 * int_pow(k, 2ul * static_cast<unsigned long>(k - j)));
}

void check_shape(const Lrs& l) {
    if (l.k < 2) throw Error("MalformedDocument", "recurrence depth must be at least 2");
    if (static_cast<int>(l.alphas.size()) != l.k || static_cast<int>(l.betas.size()) != l.k)
        throw Error("MalformedDocument", "coefficient vectors must have length k");
}

Rat beta_bound_pe(int k) { return Rat(1) / Rat(4 * int_pow(k, 2ul * k + 2)); }

}  // namespace

std::vector<Rat> Lrs::terms(int count) const {
    std::vector<Rat> u;
    for (int n = 0; n < count; ++n) {
        if (n < k) {
            u.push_back(betas[n]);
        } else {
            Rat v(0);
            for (int i = 1; i <= k; ++i) v += alphas[i - 1] * u[n - i];
            u.push_back(v);
        }
    }
    return u;
}

Rat Lrs::alpha_abs_sum() const {
    Rat s(0);
    for (const Rat& a : alphas) s += rat_abs(a);
    return s;
}

Lrs parse_lrs(const std::string& document) {
    json doc = json::parse(document, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw Error("MalformedDocument", "not a JSON object");
    if (!doc.contains("k") || !doc["k"].is_number_integer())
        throw Error("MalformedDocument", "missing integer field 'k'");
    Lrs l;
    l.k = doc["k"].get<int>();
    auto readVec = [&](const char* field) {
        if (!doc.contains(field) || !doc[field].is_array())
            throw Error("MalformedDocument", std::string("missing array field '") + field + "'");
        std::vector<Rat> out;
        for (const auto& item : doc[field]) {
            if (!item.is_string()) throw Error("MalformedDocument", "coefficients must be strings");
            out.push_back(rat_parse(item.get<std::string>()));
        }
        return out;
    };
    l.alphas = readVec("alphas");
    l.betas = readVec("betas");
    check_shape(l);
    return l;
}

std::string serialize_lrs(const Lrs& l) {
    json doc;
    doc["k"] = l.k;
    doc["alphas"] = json::array();
    for (const Rat& a : l.alphas) doc["alphas"].push_back(rat_str(a));
    doc["betas"] = json::array();
    for (const Rat& b : l.betas) doc["betas"].push_back(rat_str(b));
    return doc.dump();
}

void require_regime(const Lrs& l, RescaleRegime regime) {
    check_shape(l);
    const Rat alpha = l.alpha_abs_sum();
    for (const Rat& b : l.betas)
        if (b < 0) throw Error("NegativeInitialValue", "initial value below zero");
    if (regime == RescaleRegime::Pe) {
        if (!(alpha < Rat(1, 4)))
            throw Error("RescaleConstraintViolated", "sum |alpha_i| must be below 1/4");
        const Rat bound = beta_bound_pe(l.k);
        for (const Rat& b : l.betas)
            if (!(b < bound))
                throw Error("RescaleConstraintViolated", "beta_j must be below 1/(4 k^{2k+2})");
    } else {
        if (!(alpha <= Rat(1, 5 * (l.k + 1))))
            throw Error("RescaleConstraintViolated", "sum |alpha_i| must be at most 1/(5(k+1))");
        for (const Rat& b : l.betas)
            if (!(b * 3 <= alpha))
                throw Error("RescaleConstraintViolated", "beta_j must be at most (sum |alpha_i|)/3");
    }
}

RescaleResult rescale_lrs(const Lrs& l, RescaleRegime regime) {
    check_shape(l);
    for (const Rat& b : l.betas)
        if (b < 0) throw Error("NegativeInitialValue", "initial value below zero");
    Rat mu(0);
    for (const Rat& a : l.alphas) mu = std::max(mu, rat_abs(a));
    for (const Rat& b : l.betas) mu = std::max(mu, b);

    RescaleResult out;
    out.mu = mu;
    Rat lambda = mu == 0 ? Rat(1) : Rat(1) / (mu * Rat(4 * int_pow(l.k, 2ul * l.k + 2)));
    if (lambda > 1) lambda = 1;

    // alpha_i -> lam^i alpha_i and beta_j -> lam^{j+1} beta_j, so that the
    // rescaled sequence is v_n = lam^{n+1} u_n and every sign is preserved.
    auto applyLambda = [&](const Rat& lam) {
        Lrs r = l;
        Rat pw(1);
        for (int i = 0; i < l.k; ++i) {
            pw *= lam;  // pw = lam^{i+1}; slot i holds alpha_{i+1} and beta_i
            r.alphas[i] = l.alphas[i] * pw;
            r.betas[i] = l.betas[i] * pw;
        }
        return r;
    };

    auto alphaOk = [&](const Lrs& r) {
        const Rat s = r.alpha_abs_sum();
        return regime == RescaleRegime::Pe ? s < Rat(1, 4) : s <= Rat(1, 5 * (l.k + 1));
    };

    Lrs scaled = applyLambda(lambda);
    int guard = 0;
    auto betasOkPe = [&](const Lrs& r) {
        const Rat bound = beta_bound_pe(l.k);
        for (const Rat& b : r.betas)
            if (!(b < bound)) return false;
        return true;
    };
    while (!alphaOk(scaled) || (regime == RescaleRegime::Pe && !betasOkPe(scaled))) {
        lambda /= 2;
        scaled = applyLambda(lambda);
        if (++guard > 4096) throw Error("InternalInvariant", "rescaling did not converge");
    }

    Rat betaScale(1);
    if (regime == RescaleRegime::Cvar) {
        const Rat alpha = scaled.alpha_abs_sum();
        Rat maxBeta(0);
        for (const Rat& b : scaled.betas) maxBeta = std::max(maxBeta, b);
        if (alpha == 0) {
            if (maxBeta > 0)
                throw Error("RescaleConstraintViolated",
                            "all alpha are zero but some beta is positive");
        } else {
            while (maxBeta * betaScale * 3 > alpha) betaScale /= 2;
            for (Rat& b : scaled.betas) b *= betaScale;
        }
    }

    out.lrs = scaled;
    out.lambda = lambda;
    out.betaScale = betaScale;
    require_regime(out.lrs, regime);
    return out;
}

// ---------------------------------------------------------------------------
// Instance constructors
// ---------------------------------------------------------------------------

namespace {

// Adds the gamma/delta descent actions at t and s plus the return states.
void add_core(Mdp& m, const Lrs& l, int t, int s, int goal, bool padGoal, int* padCounter) {
    const int k = l.k;
    std::vector<int> ti(k), si(k);
    for (int i = 1; i <= k; ++i) {
        ti[i - 1] = m.add_state("t" + std::to_string(i));
        si[i - 1] = m.add_state("s" + std::to_string(i));
    }
    const Rat residual = Rat(1) - l.alpha_abs_sum();
    auto routed = [&](Action& act, int target, const Rat& prob) {
        if (padGoal) {
            int pad = m.add_state("pad" + std::to_string((*padCounter)++));
            Action& step = m.add_action(pad, "step", 0);
            step.branches.push_back(Transition{target, Rat(1)});
            act.branches.push_back(Transition{pad, prob});
        } else {
            act.branches.push_back(Transition{target, prob});
        }
    };
    auto descend = [&](int from, const std::vector<int>& same, const std::vector<int>& other,
                       const char* name) {
        Action& act = m.add_action(from, name, 0);
        for (int i = 1; i <= k; ++i) {
            const Rat& a = l.alphas[i - 1];
            if (a > 0)
                act.branches.push_back(Transition{same[i - 1], a});
            else if (a < 0)
                act.branches.push_back(Transition{other[i - 1], -a});
        }
        if (residual > 0) routed(act, goal, residual);
    };
    descend(t, ti, si, "gamma");
    descend(s, si, ti, "delta");
    for (int i = 1; i <= k; ++i) {
        Action& rt = m.add_action(ti[i - 1], "ret", -i);
        rt.branches.push_back(Transition{t, Rat(1)});
        Action& rs = m.add_action(si[i - 1], "ret", -i);
        rs.branches.push_back(Transition{s, Rat(1)});
    }
}

// Initial component: s_init loops on itself with weight +1 or moves to the
// coin state c, which chooses between t and s.
void add_initial_component(Mdp& m, int t, int s) {
    int sinit = m.add_state("sinit");
    int c = m.add_state("c");
    Action& step = m.add_action(sinit, "step", 1);
    step.branches.push_back(Transition{sinit, Rat(1, 2)});
    step.branches.push_back(Transition{c, Rat(1, 2)});
    Action& tau = m.add_action(c, "tau", 0);
    tau.branches.push_back(Transition{t, Rat(1)});
    Action& sigma = m.add_action(c, "sigma", 0);
    sigma.branches.push_back(Transition{s, Rat(1)});
    m.initial = sinit;
}

}  // namespace

Mdp build_recurrence_core(const Lrs& l) {
    check_shape(l);
    Mdp m;
    int t = m.add_state("t");
    int s = m.add_state("s");
    int goal = m.add_state("goal");
    m.goal.insert(goal);
    m.make_absorbing(goal);
    int pads = 0;
    add_core(m, l, t, s, goal, false, &pads);
    m.initial = t;
    return m;
}

Mdp build_pe_gadget(const Lrs& l) {
    require_regime(l, RescaleRegime::Pe);
    const int k = l.k;
    Mdp m;
    int t = m.add_state("t");
    int s = m.add_state("s");
    int goal = m.add_state("goal");
    int fail = m.add_state("fail");
    m.goal.insert(goal);
    m.fail.insert(fail);
    m.make_absorbing(goal);
    m.make_absorbing(fail);
    int pads = 0;
    add_core(m, l, t, s, goal, false, &pads);
    for (int j = 0; j < k; ++j) {
        const Rat pj = level_prob(k, j);
        int xj = m.add_state("x" + std::to_string(j));
        Action& ax = m.add_action(xj, "resolve", 0);
        ax.branches.push_back(Transition{goal, pj + l.betas[j]});
        ax.branches.push_back(Transition{fail, Rat(1) - pj - l.betas[j]});
        Action& gj = m.add_action(t, "gamma" + std::to_string(j), k - j);
        gj.branches.push_back(Transition{xj, Rat(1)});

        int yj = m.add_state("y" + std::to_string(j));
        Action& ay = m.add_action(yj, "resolve", 0);
        ay.branches.push_back(Transition{goal, pj});
        ay.branches.push_back(Transition{fail, Rat(1) - pj});
        Action& dj = m.add_action(s, "delta" + std::to_string(j), k - j);
        dj.branches.push_back(Transition{yj, Rat(1)});
    }
    add_initial_component(m, t, s);
    return m;
}

Mdp build_cvar_gadget(const Lrs& l) {
    require_regime(l, RescaleRegime::Cvar);
    const int k = l.k;
    const Rat alpha = l.alpha_abs_sum();
    Mdp m;
    int t = m.add_state("t");
    int s = m.add_state("s");
    int goal = m.add_state("goal");
    m.goal.insert(goal);
    m.make_absorbing(goal);
    int pads = 0;
    add_core(m, l, t, s, goal, false, &pads);
    for (int j = 0; j < k; ++j) {
        const std::string js = std::to_string(j);
        int zj = m.add_state("z" + js);
        Action& az = m.add_action(zj, "exit", 3 * k - 2 * j);
        az.branches.push_back(Transition{goal, Rat(1)});

        auto loopState = [&](const std::string& id, int loopWeight) {
            int v = m.add_state(id);
            Action& a = m.add_action(v, "loop", loopWeight);
            a.branches.push_back(Transition{v, Rat(1, k + 1)});
            a.branches.push_back(Transition{goal, Rat(k, k + 1)});
            return v;
        };
        int xj = loopState("x" + js, -k);
        int xja = m.add_state("xa" + js);
        Action& up = m.add_action(xja, "up", k);
        up.branches.push_back(Transition{xj, Rat(1)});

        Action& gj = m.add_action(t, "gamma" + js, -2 * k + j);
        if (alpha > 0) gj.branches.push_back(Transition{xja, alpha});
        if (alpha < 1) gj.branches.push_back(Transition{zj, Rat(1) - alpha});

        int yj = loopState("y" + js, -k);
        int yjp = loopState("yp" + js, -2 * k);
        int yjb = m.add_state("yb" + js);
        Action& upb = m.add_action(yjb, "up", k);
        upb.branches.push_back(Transition{yjp, Rat(1)});
        int yja = m.add_state("ya" + js);
        Action& upa = m.add_action(yja, "up", k);
        const Rat divert = alpha > 0 ? l.betas[j] / alpha : Rat(0);
        if (divert < 1) upa.branches.push_back(Transition{yj, Rat(1) - divert});
        if (divert > 0) upa.branches.push_back(Transition{yjb, divert});

        Action& dj = m.add_action(s, "delta" + js, -2 * k + j);
        if (alpha > 0) dj.branches.push_back(Transition{yja, alpha});
        if (alpha < 1) dj.branches.push_back(Transition{zj, Rat(1) - alpha});
    }
    add_initial_component(m, t, s);
    return m;
}

Mdp build_wlf_gadget(const Lrs& l) {
    require_regime(l, RescaleRegime::Pe);
    const int k = l.k;
    const Rat p0 = l.alpha_abs_sum();
    Mdp m;
    int t = m.add_state("t");
    int s = m.add_state("s");
    int goal = m.add_state("goal");
    int fail = m.add_state("fail");
    m.goal.insert(goal);
    m.fail.insert(fail);
    int pads = 0;
    add_core(m, l, t, s, goal, true, &pads);
    auto routed = [&](Action& act, int target, const Rat& prob) {
        if (prob == 0) return;
        int pad = m.add_state("pad" + std::to_string(pads++));
        Action& step = m.add_action(pad, "step", 0);
        step.branches.push_back(Transition{target, Rat(1)});
        act.branches.push_back(Transition{pad, prob});
    };
    for (int j = 0; j < k; ++j) {
        const std::string js = std::to_string(j);
        const Rat pj = level_prob(k, j);
        auto detour = [&](const std::string& base, const Rat& hit) {
            // Two-step loop: enter at the first state, resolve at the second.
            int first = m.add_state(base + js);
            int second = m.add_state(base + js + "p");
            Action& fwd = m.add_action(first, "step", 0);
            fwd.branches.push_back(Transition{second, Rat(1)});
            Action& res = m.add_action(second, "resolve", 0);
            if (p0 > 0) res.branches.push_back(Transition{first, p0});
            routed(res, goal, (Rat(1) - p0) * hit);
            routed(res, fail, (Rat(1) - p0) * (Rat(1) - hit));
            return first;
        };
        int xj = detour("x", pj + l.betas[j]);
        Action& gj = m.add_action(t, "gamma" + js, k - j);
        if (p0 > 0) gj.branches.push_back(Transition{xj, p0});
        routed(gj, goal, (Rat(1) - p0) * (pj + l.betas[j]));
        routed(gj, fail, (Rat(1) - p0) * (Rat(1) - pj - l.betas[j]));

        int yj = detour("y", pj);
        Action& dj = m.add_action(s, "delta" + js, k - j);
        if (p0 > 0) dj.branches.push_back(Transition{yj, p0});
        routed(dj, goal, (Rat(1) - p0) * pj);
        routed(dj, fail, (Rat(1) - p0) * (Rat(1) - pj));
    }
    add_initial_component(m, t, s);
    Action& rg = m.add_action(goal, "reset", 0);
    rg.branches.push_back(Transition{m.initial, Rat(1)});
    Action& rf = m.add_action(fail, "reset", 0);
    rf.branches.push_back(Transition{m.initial, Rat(1)});
    return m;
}

Nfa build_nfa_A() {
    Nfa a;
    a.states = {"init", "pos", "zero", "neg", "acc"};
    a.initial = 0;
    a.accepting = {a.state_index("acc")};
    a.add_transition("init", "p&!g&!f", "pos");
    a.add_transition("init", "z&!g&!f", "zero");
    a.add_transition("init", "n&!g&!f", "neg");
    a.add_transition("init", "g&p", "acc");
    a.add_transition("init", "g&z&c", "acc");
    a.add_transition("init", "f&c", "acc");
    a.add_transition("pos", "!g&!f", "pos");
    a.add_transition("pos", "g", "acc");
    a.add_transition("pos", "f&c", "acc");
    a.add_transition("zero", "!g&!f", "zero");
    a.add_transition("zero", "g&c", "acc");
    a.add_transition("zero", "f&c", "acc");
    a.add_transition("neg", "!g&!f", "neg");
    a.add_transition("neg", "f&c", "acc");
    return a;
}

LrpInstance build_lrp_instance(const Lrs& l) {
    Mdp k = build_wlf_gadget(l);
    LrpInstance out;
    // Weight normalization: every action of weight w >= 1 routes through w
    // fresh unit-weight states labeled p; all other states are labeled z.
    Mdp n;
    std::vector<int> mapped(k.num_states());
    for (int v = 0; v < k.num_states(); ++v)
        mapped[v] = n.add_state(k.states[v].id, {"z"});
    int chain = 0;
    for (int v = 0; v < k.num_states(); ++v) {
        for (const Action& act : k.states[v].actions) {
            long w = act.weight.get_si();
            const long sign = w > 0 ? 1 : -1;
            const long units = w < 0 ? -w : w;
            const char* lbl = w > 0 ? "p" : "n";
            int from = mapped[v];
            std::string name = act.name;
            for (long u = 0; u < units; ++u) {
                int unit = n.add_state("u" + std::to_string(chain++), {lbl});
                Action& step = n.add_action(from, name, u == 0 ? 0 : sign);
                step.branches.push_back(Transition{unit, Rat(1)});
                from = unit;
                name = "unit";
            }
            Action& fin =
                n.add_action(from, units == 0 ? name : "unit", units == 0 ? 0 : sign);
            for (const Transition& tr : act.branches)
                fin.branches.push_back(Transition{mapped[tr.to], tr.prob});
        }
    }
    n.initial = mapped[k.initial];
    // Duplicate goal/fail into coin-flip copies; the c-labeled copy is hit
    // with probability 1/2 on every entry.
    std::map<int, std::pair<int, int>> copies;
    auto duplicate = [&](int orig, bool isGoal) {
        const State base = n.states[mapped[orig]];
        std::vector<std::string> plain = isGoal ? std::vector<std::string>{"g", "z"}
                                                : std::vector<std::string>{"f"};
        std::vector<std::string> coin = plain;
        coin.push_back("c");
        n.states[mapped[orig]].labels = plain;
        int copy = n.add_state(base.id + "_c", coin);
        n.states[copy].actions = base.actions;
        copies[mapped[orig]] = {mapped[orig], copy};
        if (isGoal) {
            out.spec.goalSet.insert(mapped[orig]);
            out.spec.goalSet.insert(copy);
        } else {
            out.spec.failSet.insert(mapped[orig]);
            out.spec.failSet.insert(copy);
        }
    };
    for (int g : k.goal) duplicate(g, true);
    for (int f : k.fail) duplicate(f, false);
    for (State& st : n.states)
        for (Action& act : st.actions) {
            std::vector<Transition> rewired;
            for (const Transition& tr : act.branches) {
                auto it = copies.find(tr.to);
                if (it == copies.end()) {
                    rewired.push_back(tr);
                } else {
                    rewired.push_back(Transition{it->second.first, tr.prob / 2});
                    rewired.push_back(Transition{it->second.second, tr.prob / 2});
                }
            }
            act.branches = std::move(rewired);
        }
    n.goal = out.spec.goalSet;
    n.fail = out.spec.failSet;
    out.mdp = std::move(n);
    out.nfa = build_nfa_A();
    out.chainStates = chain;
    return out;
}

// ---------------------------------------------------------------------------
// Canonical scheduler values
// ---------------------------------------------------------------------------

namespace {

// Goal-absorption data of the single-action region below an entry action:
// r = probability of eventually reaching goal, e = expected weight collected
// after arrival, counted on goal-reaching paths only.
struct Absorption {
    std::map<int, Rat> r, e;
};

Absorption absorption_solve(const Mdp& m, const std::vector<int>& starts) {
    Absorption out;
    std::vector<int> order;
    std::map<int, int> pos;
    std::deque<int> queue(starts.begin(), starts.end());
    std::set<int> seen(starts.begin(), starts.end());
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        if (m.is_trap(v)) continue;
        if (m.states[v].actions.size() != 1)
            throw Error("InternalInvariant", "absorption region must be deterministic");
        pos[v] = static_cast<int>(order.size());
        order.push_back(v);
        for (const Transition& tr : m.states[v].actions[0].branches)
            if (!seen.count(tr.to)) {
                seen.insert(tr.to);
                queue.push_back(tr.to);
            }
    }
    const std::size_t nn = order.size();
    RatMatrix mat = RatMatrix::identity(nn), rhsR(nn, 1);
    for (std::size_t i = 0; i < nn; ++i)
        for (const Transition& tr : m.states[order[i]].actions[0].branches) {
            if (m.is_goal(tr.to))
                rhsR.at(i, 0) += tr.prob;
            else if (!m.is_fail(tr.to))
                mat.at(i, pos.at(tr.to)) -= tr.prob;
        }
    RatMatrix solR = nn > 0 ? mat.solve(rhsR) : RatMatrix(0, 1);
    auto rOf = [&](int v) {
        if (m.is_goal(v)) return Rat(1);
        if (m.is_fail(v)) return Rat(0);
        return solR.at(pos.at(v), 0);
    };
    RatMatrix rhsE(nn, 1);
    for (std::size_t i = 0; i < nn; ++i) {
        const Action& act = m.states[order[i]].actions[0];
        for (const Transition& tr : act.branches) rhsE.at(i, 0) += tr.prob * Rat(act.weight) * rOf(tr.to);
    }
    RatMatrix solE = nn > 0 ? mat.solve(rhsE) : RatMatrix(0, 1);
    for (std::size_t i = 0; i < nn; ++i) {
        out.r[order[i]] = solR.at(i, 0);
        out.e[order[i]] = solE.at(i, 0);
    }
    for (int g : m.goal) {
        out.r[g] = 1;
        out.e[g] = 0;
    }
    for (int f : m.fail) {
        out.r[f] = 0;
        out.e[f] = 0;
    }
    return out;
}

// Value of taking `action` from `state` with accumulated weight w0, under
// the absorption data of the action's downstream region.
Rat entry_value(const Mdp& m, int state, int action, const Rat& w0) {
    const Action& act = m.states[state].actions[action];
    std::vector<int> starts;
    for (const Transition& tr : act.branches)
        if (!m.is_trap(tr.to)) starts.push_back(tr.to);
    Absorption ab = absorption_solve(m, starts);
    Rat value(0);
    for (const Transition& tr : act.branches)
        value += tr.prob * ((w0 + Rat(act.weight)) * ab.r.at(tr.to) + ab.e.at(tr.to));
    return value;
}

enum class GadgetKind { Pe, Cvar };

GadgetKind detect_kind(const Mdp& g) {
    if (g.find_state("z0") >= 0) return GadgetKind::Cvar;
    if (g.find_state("x0") >= 0 && g.find_state("x0p") < 0) return GadgetKind::Pe;
    throw Error("MalformedDocument", "not a recognized recurrence instance");
}

}  // namespace

DSequence gadget_d_sequence(const Mdp& g, const Lrs& l, int horizon) {
    if (horizon <= 0) throw Error("HorizonNonpositive", "horizon must be positive");
    check_shape(l);
    const int k = l.k;
    const GadgetKind kind = detect_kind(g);
    DSequence out;
    out.baseLevel = kind == GadgetKind::Pe ? Int(-(k - 1)) : Int(-k);
    out.et.assign(horizon + 1, Rat(0));
    out.es.assign(horizon + 1, Rat(0));
    const int t = g.state_index("t"), s = g.state_index("s");
    auto actionIndex = [&](int state, const std::string& name) {
        const auto& acts = g.states[state].actions;
        for (std::size_t i = 0; i < acts.size(); ++i)
            if (acts[i].name == name) return static_cast<int>(i);
        throw Error("InternalInvariant", "missing action " + name);
    };
    for (int j = 0; j < k && j <= horizon; ++j) {
        const Rat w0 = Rat(out.baseLevel + j);
        out.et[j] = entry_value(g, t, actionIndex(t, "gamma" + std::to_string(j)), w0);
        out.es[j] = entry_value(g, s, actionIndex(s, "delta" + std::to_string(j)), w0);
    }
    const Rat residual = Rat(1) - l.alpha_abs_sum();
    for (int n = k; n <= horizon; ++n) {
        const Rat level = Rat(out.baseLevel + n);
        // The residual branch reaches goal at the current level; it counts
        // fully for partial expectations and not at all for the nonpositive
        // part (the recursion region has level >= 0 there).
        Rat et = kind == GadgetKind::Pe ? residual * level : Rat(0);
        Rat es = et;
        for (int i = 1; i <= k; ++i) {
            const Rat& a = l.alphas[i - 1];
            if (a > 0) {
                et += a * out.et[n - i];
                es += a * out.es[n - i];
            } else if (a < 0) {
                et += (-a) * out.es[n - i];
                es += (-a) * out.et[n - i];
            }
        }
        out.et[n] = et;
        out.es[n] = es;
    }
    out.d.resize(horizon + 1);
    for (int n = 0; n <= horizon; ++n) out.d[n] = out.et[n] - out.es[n];
    return out;
}

// ---------------------------------------------------------------------------
// Closed-form thresholds
// ---------------------------------------------------------------------------

namespace {

struct SeriesData {
    RatMatrix A;           // 2k x 2k inter-block descent matrix
    std::vector<Rat> a, b; // linear and constant goal-absorption terms
};

// Reach probabilities of the level-indexed descent chain: starting at offset
// i of a block, where does the walk land in the previous block, and with
// which weights does it get absorbed to goal on the way.
SeriesData build_series(const Lrs& l) {
    const int k = l.k;
    const Rat residual = Rat(1) - l.alpha_abs_sum();
    SeriesData out;
    out.A = RatMatrix(2 * k, 2 * k);
    out.a.assign(2 * k, Rat(0));
    out.b.assign(2 * k, Rat(0));
    for (int side0 = 0; side0 < 2; ++side0)
        for (int i0 = k; i0 >= 1; --i0) {
            const int row = side0 * k + (k - i0);
            std::vector<std::vector<Rat>> vis(2, std::vector<Rat>(k + 1, Rat(0)));
            vis[side0][i0] = 1;
            for (int i = k; i >= 1; --i)
                for (int side = 0; side < 2; ++side) {
                    const Rat v = vis[side][i];
                    if (v == 0) continue;
                    out.a[row] += Rat(k) * residual * v;
                    out.b[row] += residual * v * Rat(i);
                    for (int j = 1; j <= k; ++j) {
                        const Rat& al = l.alphas[j - 1];
                        if (al == 0) continue;
                        const int tgtSide = al > 0 ? side : 1 - side;
                        const Rat pr = rat_abs(al) * v;
                        const int o = i - j;
                        if (o >= 1)
                            vis[tgtSide][o] += pr;
                        else
                            out.A.at(row, tgtSide * k + (-o)) += pr;
                    }
                }
        }
    return out;
}

std::vector<Rat> vec_add(const std::vector<Rat>& x, const std::vector<Rat>& y) {
    std::vector<Rat> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] + y[i];
    return z;
}

std::map<std::string, std::string> canonical_rule(const Lrs& l, const Int& baseLevel) {
    std::map<std::string, std::string> rule;
    rule["c"] = "tau";
    rule["t|weight above base levels"] = "gamma";
    rule["s|weight above base levels"] = "delta";
    for (int j = 0; j < l.k; ++j) {
        const std::string lvl = int_str(baseLevel + j);
        rule["t|weight " + lvl] = "gamma" + std::to_string(j);
        rule["s|weight " + lvl] = "delta" + std::to_string(j);
    }
    rule["t|weight below base levels"] = "gamma";
    rule["s|weight below base levels"] = "delta";
    return rule;
}

}  // namespace

ThresholdReport threshold_pe(const Lrs& input) {
    RescaleResult rr = rescale_lrs(input, RescaleRegime::Pe);
    const Lrs& l = rr.lrs;
    const int k = l.k;
    ThresholdReport rep;
    rep.rescaled = l;
    rep.lambda = rr.lambda;
    rep.mu = rr.mu;
    rep.betaScale = rr.betaScale;
    rep.gadget = build_pe_gadget(l);
    rep.canonical = canonical_rule(l, Int(-(k - 1)));

    DSequence base = gadget_d_sequence(rep.gadget, l, k);
    rep.vMinus1.assign(2 * k, Rat(0));
    for (int q = 0; q < k; ++q) {
        rep.vMinus1[q] = base.et[k - 1 - q];      // e(t, -q)
        rep.vMinus1[k + q] = base.es[k - 1 - q];  // e(s, -q)
    }
    SeriesData sd = build_series(l);
    rep.A = sd.A;
    rep.a = sd.a;
    rep.b = sd.b;
    if (!(sd.A.inf_norm() < 1))
        throw Error("InternalInvariant", "descent matrix must be a strict contraction");

    rep.c.assign(2 * k, Rat(0));
    for (int q = 0; q < k; ++q) rep.c[q] = Rat(1) / Rat(int_pow(2, k - q));

    const Rat x = Rat(1) / Rat(int_pow(2, k));
    const Rat r = Rat(int_pow(2, k)) / Rat(int_pow(2, k) - 1);
    RatMatrix I = RatMatrix::identity(2 * k);
    RatMatrix s1 = sd.A * (I - sd.A.scaled(x)).inverse();
    RatMatrix iMinusAInv = (I - sd.A).inverse();
    RatMatrix s2 = iMinusAInv * (I.scaled(r) - s1);
    RatMatrix s3 = iMinusAInv * iMinusAInv * (s1 - sd.A.scaled(r) + (I - sd.A).scaled(x * r * r));
    std::vector<Rat> total =
        vec_add(mat_vec(s1, rep.vMinus1), vec_add(mat_vec(s3, rep.a), mat_vec(s2, rep.b)));
    rep.seriesValue = dot(rep.c, total);
    rep.theta = rep.seriesValue;
    rep.divisor = 1;
    return rep;
}

ThresholdReport threshold_cvar(const Lrs& input) {
    RescaleResult rr = rescale_lrs(input, RescaleRegime::Cvar);
    const Lrs& l = rr.lrs;
    const int k = l.k;
    ThresholdReport rep;
    rep.rescaled = l;
    rep.lambda = rr.lambda;
    rep.mu = rr.mu;
    rep.betaScale = rr.betaScale;
    rep.gadget = build_cvar_gadget(l);
    rep.canonical = canonical_rule(l, Int(-k));

    DSequence base = gadget_d_sequence(rep.gadget, l, k);
    const Rat alpha = l.alpha_abs_sum();
    for (int j = 0; j < k; ++j) {
        // Cross-check the linear solves against the derived closed forms.
        const Rat expectT = alpha * Rat(-3 * k + 2 * j - 1);
        if (base.et[j] != expectT || base.es[j] != expectT - l.betas[j])
            throw Error("InternalInvariant", "entry-action values disagree with closed form");
    }
    rep.vMinus1.assign(2 * k, Rat(0));
    for (int q = 0; q < k; ++q) {
        rep.vMinus1[q] = base.et[k - 1 - q];      // e(t, -1-q)
        rep.vMinus1[k + q] = base.es[k - 1 - q];  // e(s, -1-q)
    }
    SeriesData sd = build_series(l);
    rep.A = sd.A;
    rep.a.assign(2 * k, Rat(0));  // goal exits at non-negative levels count 0
    rep.b.assign(2 * k, Rat(0));
    if (!(sd.A.inf_norm() < 1))
        throw Error("InternalInvariant", "descent matrix must be a strict contraction");

    // Block n covers levels nk .. nk+k-1 (descending), so the weighting
    // starts at 2^{-(k-1)} and ends at 2^0; the level-0 term is subtracted
    // afterwards because the sum of interest starts at level 1.
    rep.c.assign(2 * k, Rat(0));
    for (int q = 0; q < k; ++q) rep.c[q] = Rat(1) / Rat(int_pow(2, k - 1 - q));

    const Rat x = Rat(1) / Rat(int_pow(2, k));
    RatMatrix I = RatMatrix::identity(2 * k);
    RatMatrix s1 = sd.A * (I - sd.A.scaled(x)).inverse();
    const Rat sum = dot(rep.c, mat_vec(s1, rep.vMinus1));
    const Rat et0 = mat_vec(sd.A, rep.vMinus1)[k - 1];
    rep.seriesValue = sum - et0;
    rep.theta = Rat(2, 3) * rep.seriesValue;
    rep.divisor = 1;

    Mdp prefixed = rep.gadget;
    int oldInit = prefixed.initial;
    int pre = prefixed.add_state("pinit");
    Action& act = prefixed.add_action(pre, "flip", 0);
    act.branches.push_back(Transition{oldInit, Rat(1, 3)});
    act.branches.push_back(Transition{*prefixed.goal.begin(), Rat(2, 3)});
    prefixed.initial = pre;
    rep.prefixed = std::move(prefixed);
    return rep;
}

ThresholdReport threshold_wlf(const Lrs& input) {
    ThresholdReport rep = threshold_pe(input);
    const Lrs& l = rep.rescaled;
    rep.gadget = build_wlf_gadget(l);
    rep.seriesValue = rep.theta;
    rep.divisor = Rat(4) + Rat(2) / (Rat(1) - l.alpha_abs_sum());
    rep.theta = rep.seriesValue / rep.divisor;

    // The return time must not depend on the choices; verify under three
    // distinct schedulers via exact hitting-time solves.
    const Mdp& g = rep.gadget;
    auto actionIndex = [&](int state, const std::string& name) {
        const auto& acts = g.states[state].actions;
        for (std::size_t i = 0; i < acts.size(); ++i)
            if (acts[i].name == name) return static_cast<int>(i);
        throw Error("InternalInvariant", "missing action " + name);
    };
    const int t = g.state_index("t"), s = g.state_index("s"), c = g.state_index("c");
    for (int variant = 0; variant < 3; ++variant) {
        MemorylessPolicy pol(g.num_states());
        for (int v = 0; v < g.num_states(); ++v) pol.choice[v] = 0;
        if (variant == 0) {
            pol.choice[c] = actionIndex(c, "tau");
            pol.choice[t] = actionIndex(t, "gamma");
            pol.choice[s] = actionIndex(s, "delta");
        } else if (variant == 1) {
            pol.choice[c] = actionIndex(c, "sigma");
            pol.choice[t] = actionIndex(t, "gamma0");
            pol.choice[s] = actionIndex(s, "delta0");
        } else {
            pol.choice[c] = actionIndex(c, "tau");
            pol.choice[t] = actionIndex(t, "gamma" + std::to_string(l.k - 1));
            pol.choice[s] = actionIndex(s, "delta");
        }
        InducedChain chain = induce_chain(g, pol);
        std::vector<char> target(chain.num_nodes(), 0);
        for (int n = 0; n < chain.num_nodes(); ++n)
            if (g.is_trap(chain.nodes[n].state)) target[n] = 1;
        auto steps = chain_expected_steps(chain.rows, target, chain.initial);
        if (!steps || *steps + 1 != rep.divisor)
            throw Error("InternalInvariant", "return time depends on the scheduler");
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

PeCeReduction reduce_pe_to_ce(const Mdp& m, const Rat& theta) {
    PeCeReduction out;
    out.scale = theta.get_den();
    Mdp n = m;
    for (State& st : n.states)
        for (Action& act : st.actions) act.weight *= out.scale;
    int goalNew = n.add_state("ce_goal");
    n.make_absorbing(goalNew);
    for (int g : n.goal) {
        n.states[g].actions.clear();
        Action& fwd = n.add_action(g, "forward", theta.get_num());
        fwd.branches.push_back(Transition{goalNew, Rat(1)});
    }
    n.goal = {goalNew};
    int init = n.add_state("ce_init");
    Action& split = n.add_action(init, "split", 0);
    split.branches.push_back(Transition{m.initial, Rat(1, 2)});
    split.branches.push_back(Transition{goalNew, Rat(1, 2)});
    n.initial = init;
    out.thresholdScaled = Rat(theta.get_num());
    out.mdp = std::move(n);
    return out;
}

std::pair<Mdp, CePeReductionParams> reduce_ce_to_pe_acyclic(const Mdp& input, const Rat& theta) {
    if (!input.weights_nonnegative())
        throw Error("NegativeWeight", "reduction expects non-negative weights");
    if (!acyclic_check(input).acyclic)
        throw Error("NotAcyclic", "reduction expects an acyclic model");
    CePeReductionParams params;
    Mdp m = input;
    params.theta = theta;
    if (min_reach_prob(input, input.goal)[input.initial] == 0) {
        // Restore Pr^min(goal) > 0: a fresh initial state moves half-half to
        // the old initial state and to goal with the threshold as weight;
        // weights are scaled to keep them integral.
        params.preGadget = true;
        params.scale = theta.get_den();
        for (State& st : m.states)
            for (Action& act : st.actions) act.weight *= params.scale;
        int pre = m.add_state("pre_init");
        int fwd = m.add_state("pre_goal");
        // Only the direct branch may carry the threshold weight, so it lives
        // on a forwarding state rather than on the half-half split itself.
        Action& carry = m.add_action(fwd, "tau", theta.get_num());
        carry.branches.push_back(Transition{*m.goal.begin(), Rat(1)});
        Action& tau = m.add_action(pre, "tau", 0);
        tau.branches.push_back(Transition{m.initial, Rat(1, 2)});
        tau.branches.push_back(Transition{fwd, Rat(1, 2)});
        m.initial = pre;
        params.theta = Rat(theta.get_num());
    }

    params.m = 1;
    for (const State& st : m.states) {
        if (st.actions.empty()) continue;
        bool trap = false;
        for (const Action& act : st.actions)
            for (const Transition& tr : act.branches)
                if (tr.to == (&st - m.states.data()) && tr.prob == 1) trap = true;
        if (trap && st.actions.size() == 1) continue;
        Int stateLcm = 1;
        for (const Action& act : st.actions)
            for (const Transition& tr : act.branches) {
                Int den = tr.prob.get_den();
                mpz_lcm(stateLcm.get_mpz_t(), stateLcm.get_mpz_t(), den.get_mpz_t());
            }
        params.m *= stateLcm;
    }
    params.delta = Rat(1) / (Rat(params.theta.get_den()) * Rat(params.m));

    // Longest accumulated weight over paths into fail, by memoized search.
    std::map<int, std::optional<Int>> best;  // nullopt: fail unreachable
    std::function<std::optional<Int>(int)> toFail = [&](int v) -> std::optional<Int> {
        if (m.is_fail(v)) return Int(0);
        if (m.is_goal(v) || m.states[v].actions.empty()) return std::nullopt;
        auto it = best.find(v);
        if (it != best.end()) return it->second;
        std::optional<Int> acc;
        for (const Action& act : m.states[v].actions)
            for (const Transition& tr : act.branches) {
                if (tr.to == v) continue;  // absorbing self-loops of traps
                auto sub = toFail(tr.to);
                if (sub && (!acc || act.weight + *sub > *acc)) acc = act.weight + *sub;
            }
        best[v] = acc;
        return acc;
    };
    auto maxFail = toFail(m.initial);
    params.w = (maxFail ? *maxFail : Int(0)) + 1;
    params.p = params.delta / (Rat(2) * Rat(params.w));
    params.R = Rat(2) * Rat(params.w) * params.theta / params.delta;
    params.thrGeq = params.theta + params.delta;
    params.thrGt = params.theta + params.delta / 2;
    params.thrMin = params.theta - params.delta / 2;

    if (params.R.get_den() != 1)
        throw Error("InternalInvariant", "escape weight must be integral");
    int failPrime = m.add_state("pe_failp");
    m.make_absorbing(failPrime);
    const int goalState = *m.goal.begin();
    std::set<int> oldFail = m.fail;
    for (int f : oldFail) {
        m.states[f].actions.clear();
        Action& tau = m.add_action(f, "tau", params.R.get_num());
        tau.branches.push_back(Transition{goalState, params.p});
        tau.branches.push_back(Transition{failPrime, Rat(1) - params.p});
        m.fail.erase(f);
    }
    m.fail.insert(failPrime);
    return {std::move(m), params};
}

std::pair<Mdp, Rat> reduce_pe_to_wlf_acyclic(const Mdp& input, const Rat& theta) {
    if (!input.weights_nonnegative())
        throw Error("NegativeWeight", "reduction expects non-negative weights");
    if (!acyclic_check(input).acyclic)
        throw Error("NotAcyclic", "reduction expects an acyclic model");
    Mdp m = input;
    // Longest number of steps from each state to a trap.
    std::map<int, long> height;
    std::function<long(int)> h = [&](int v) -> long {
        if (m.is_trap(v) || input.states[v].actions.empty()) return 0;
        auto it = height.find(v);
        if (it != height.end()) return it->second;
        long acc = 0;
        for (const Action& act : input.states[v].actions)
            for (const Transition& tr : act.branches) acc = std::max(acc, 1 + h(tr.to));
        height[v] = acc;
        return acc;
    };
    const long ell = h(input.initial);
    int padCount = 0;
    for (int v = 0; v < input.num_states(); ++v) {
        if (m.is_trap(v)) continue;
        const long hv = h(v);
        for (std::size_t ai = 0; ai < input.states[v].actions.size(); ++ai)
            for (std::size_t bi = 0; bi < input.states[v].actions[ai].branches.size(); ++bi) {
                const Transition& tr = input.states[v].actions[ai].branches[bi];
                long pad = hv - 1 - h(tr.to);
                int target = tr.to;
                for (long u = 0; u < pad; ++u) {
                    int mid = m.add_state("len" + std::to_string(padCount++));
                    Action& step = m.add_action(mid, "step", 0);
                    step.branches.push_back(Transition{target, Rat(1)});
                    target = mid;
                }
                m.states[v].actions[ai].branches[bi].to = target;
            }
    }
    for (int g : std::set<int>(m.goal)) {
        m.states[g].actions.clear();
        Action& reset = m.add_action(g, "reset", 0);
        reset.branches.push_back(Transition{m.initial, Rat(1)});
    }
    for (int f : std::set<int>(m.fail)) {
        m.states[f].actions.clear();
        Action& reset = m.add_action(f, "reset", 0);
        reset.branches.push_back(Transition{m.initial, Rat(1)});
    }
    return {std::move(m), theta / Rat(ell + 1)};
}

std::optional<int> positivity_bruteforce(const Lrs& l, int horizon) {
    check_shape(l);
    if (horizon < 0) return std::nullopt;
    std::vector<Rat> u = l.terms(horizon + 1);
    for (int n = 0; n <= horizon; ++n)
        if (u[n] < 0) return n;
    return std::nullopt;
}

int default_horizon(const Lrs& l) { return 4 * l.k + 16; }

}  // namespace mdpsat
