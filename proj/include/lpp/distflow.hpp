#pragma once

// Exact ground truth for a fixed switch configuration: a nonlinear branch-flow
// solve on each energized tree (backward power aggregation, forward voltage
// propagation, squared-current update from the receiving-end coupling), a
// structure checker for forests, and a brute-force optimizer that scores every
// valid configuration with exact physics.
//
// Conventions match the linear model: flows are measured at a feeder's `to`
// end, the loss term r*I^2 is charged at the `from` end, and the coupling
// V_to^2 * I^2 = P^2 + Q^2 holds on the stored orientation. Each tree has one
// designated reference bus held at the nominal voltage; its injection is
// whatever closes the balance, so any supplied generation there is ignored.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "enumeration.hpp"
#include "model.hpp"
#include "network.hpp"
#include "pwl.hpp"

namespace lpp {

struct ExactFlowState {
    // per feeder on the stored orientation; zero on open feeders
    std::vector<double> p, q, i_sqr;
    // per bus; NaN marks a de-energized bus
    std::vector<double> v_sqr;
    // injections as realized: the inputs, with each reference bus overwritten
    std::vector<double> gen_p, gen_q;
    // nodal balance residuals of the returned state, all buses
    std::vector<double> residual_p, residual_q;
    int sweeps = 0;
};

struct Injections {
    std::vector<double> gen_p, gen_q;    // fixed per bus, references overwritten
    std::vector<double> load_p, load_q;  // served demand per bus
    std::vector<char> slack;             // 1 marks the voltage reference of its tree
};

namespace distflow_detail {

// feeders name their endpoints; resolve them to indices once per call
struct Endpoints {
    std::vector<std::size_t> from, to;
};
inline Endpoints endpoints(const Network& net) {
    Endpoints e;
    e.from.reserve(net.feeders.size());
    e.to.reserve(net.feeders.size());
    for (const auto& f : net.feeders) {
        e.from.push_back(net.bus_index(f.from));
        e.to.push_back(net.bus_index(f.to));
    }
    return e;
}

}  // namespace distflow_detail

// ---- reference designation and canonical injections

/// Marks one voltage reference per energized tree: the lowest-index energized
/// root it contains. Trees holding several roots keep the extras as ordinary
/// buses; a rootless tree is left unmarked for distflow_solve to reject.
inline std::vector<char> mark_slacks(const Network& net, const BinaryAssignment& asg) {
    const std::size_t nb = net.buses.size();
    const auto ep = distflow_detail::endpoints(net);
    enum_detail::UnionFind uf(static_cast<int>(nb));
    for (std::size_t f = 0; f < net.feeders.size(); ++f)
        if (asg.w[f] != 0 && asg.v[ep.from[f]] != 0 && asg.v[ep.to[f]] != 0)
            uf.join(static_cast<int>(ep.from[f]), static_cast<int>(ep.to[f]));
    std::vector<int> leader_pick(nb, -1);
    for (std::size_t i = 0; i < nb; ++i) {
        if (asg.v[i] == 0 || !net.buses[i].is_root) continue;
        const int lead = uf.find(static_cast<int>(i));
        if (leader_pick[lead] < 0) leader_pick[lead] = static_cast<int>(i);
    }
    std::vector<char> slack(nb, 0);
    for (std::size_t i = 0; i < nb; ++i)
        if (leader_pick[i] >= 0) slack[static_cast<std::size_t>(leader_pick[i])] = 1;
    return slack;
}

/// All-or-nothing service at nominal demand, no dispatched generation: the
/// injections a configuration implies on its own.
inline Injections served_injections(const Network& net, const BinaryAssignment& asg) {
    const std::size_t nb = net.buses.size();
    Injections inj;
    inj.gen_p.assign(nb, 0.0);
    inj.gen_q.assign(nb, 0.0);
    inj.load_p.assign(nb, 0.0);
    inj.load_q.assign(nb, 0.0);
    for (std::size_t i = 0; i < nb; ++i) {
        if (asg.v[i] == 0) continue;
        inj.load_p[i] = net.buses[i].load_p;
        inj.load_q[i] = net.buses[i].load_q;
    }
    inj.slack = mark_slacks(net, asg);
    return inj;
}

/// A given dispatch (e.g. an accepted solution's) with references floating.
inline Injections injections_from_dispatch(const Network& net, const BinaryAssignment& asg,
                                           std::vector<double> gen_p, std::vector<double> gen_q,
                                           std::vector<double> load_p, std::vector<double> load_q) {
    Injections inj;
    inj.gen_p = std::move(gen_p);
    inj.gen_q = std::move(gen_q);
    inj.load_p = std::move(load_p);
    inj.load_q = std::move(load_q);
    inj.slack = mark_slacks(net, asg);
    return inj;
}

// ---- exact power flow

inline ExactFlowState distflow_solve(const Network& net, const BinaryAssignment& asg,
                                     const Injections& inj) {
    const std::size_t nb = net.buses.size();
    const std::size_t nf = net.feeders.size();
    if (asg.v.size() != nb || asg.w.size() != nf)
        throw Error("distflow_solve: assignment shape does not match the network");
    if (inj.gen_p.size() != nb || inj.gen_q.size() != nb || inj.load_p.size() != nb ||
        inj.load_q.size() != nb || inj.slack.size() != nb)
        throw Error("distflow_solve: injection shape does not match the network");
    for (std::size_t i = 0; i < nb; ++i) {
        if (asg.v[i] != 0) continue;
        if (std::abs(inj.load_p[i]) > 1e-12 || std::abs(inj.load_q[i]) > 1e-12 ||
            std::abs(inj.gen_p[i]) > 1e-12 || std::abs(inj.gen_q[i]) > 1e-12)
            throw Error("distflow_solve: de-energized bus " + net.buses[i].id +
                        " carries a nonzero injection");
        if (inj.slack[i])
            throw Error("distflow_solve: de-energized bus " + net.buses[i].id +
                        " cannot be a voltage reference");
    }

    // tree structure: adjacency over closed feeders, cycle and endpoint checks
    const auto ep = distflow_detail::endpoints(net);
    std::vector<std::vector<std::pair<int, int>>> adj(nb);  // (feeder, other bus)
    enum_detail::UnionFind uf(static_cast<int>(nb));
    for (std::size_t f = 0; f < nf; ++f) {
        if (asg.w[f] == 0) continue;
        const Feeder& fd = net.feeders[f];
        const std::size_t a = ep.from[f], b = ep.to[f];
        if (asg.v[a] == 0 || asg.v[b] == 0)
            throw Error("distflow_solve: closed feeder " + fd.id + " touches a de-energized bus");
        if (!uf.join(static_cast<int>(a), static_cast<int>(b)))
            throw Error("distflow_solve: closed feeders form a cycle through " + fd.id);
        adj[a].push_back({static_cast<int>(f), static_cast<int>(b)});
        adj[b].push_back({static_cast<int>(f), static_cast<int>(a)});
    }

    // rooted orientation: breadth-first from each reference
    std::vector<int> parent(nb, -1), parent_edge(nb, -1);
    std::vector<char> seen(nb, 0);
    std::vector<int> order;  // references first, then each tree top-down
    order.reserve(nb);
    for (std::size_t s = 0; s < nb; ++s) {
        if (!inj.slack[s]) continue;
        seen[s] = 1;
        std::size_t head = order.size();
        order.push_back(static_cast<int>(s));
        while (head < order.size()) {
            const int u = order[head++];
            for (const auto& [e, w] : adj[static_cast<std::size_t>(u)]) {
                if (seen[static_cast<std::size_t>(w)]) continue;
                if (inj.slack[static_cast<std::size_t>(w)])
                    throw Error("distflow_solve: two voltage references share a tree (" +
                                net.buses[s].id + ", " + net.buses[static_cast<std::size_t>(w)].id +
                                ")");
                seen[static_cast<std::size_t>(w)] = 1;
                parent[static_cast<std::size_t>(w)] = u;
                parent_edge[static_cast<std::size_t>(w)] = e;
                order.push_back(w);
            }
        }
    }
    for (std::size_t i = 0; i < nb; ++i)
        if (asg.v[i] != 0 && !seen[i])
            throw Error("distflow_solve: energized bus " + net.buses[i].id +
                        " has no voltage reference in its tree");

    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double v0 = net.v_norm * net.v_norm;
    std::vector<double> v2(nb, v0);        // flat start
    std::vector<double> fp(nf, 0.0), fq(nf, 0.0), isq(nf, 0.0);  // toward-child flow at child
    std::vector<double> dp(nb, 0.0), dq(nb, 0.0);

    auto backward = [&]() -> double {
        double delta = 0.0;
        for (std::size_t i = 0; i < nb; ++i) {
            dp[i] = inj.load_p[i] - (inj.slack[i] ? 0.0 : inj.gen_p[i]);
            dq[i] = inj.load_q[i] - (inj.slack[i] ? 0.0 : inj.gen_q[i]);
        }
        for (std::size_t k = order.size(); k-- > 0;) {
            const int c = order[k];
            const int e = parent_edge[static_cast<std::size_t>(c)];
            if (e < 0) continue;  // a reference heads its tree
            const Feeder& fd = net.feeders[static_cast<std::size_t>(e)];
            const std::size_t ce = static_cast<std::size_t>(e), cb = static_cast<std::size_t>(c);
            fp[ce] = dp[cb];
            fq[ce] = dq[cb];
            const double next = (fp[ce] * fp[ce] + fq[ce] * fq[ce]) / v2[cb];
            delta = std::max(delta, std::abs(next - isq[ce]));
            isq[ce] = next;
            const std::size_t pb = static_cast<std::size_t>(parent[cb]);
            dp[pb] += fp[ce] + fd.r * isq[ce];
            dq[pb] += fq[ce] + fd.x * isq[ce];
        }
        return delta;
    };
    auto forward = [&](int sweep) -> double {
        double delta = 0.0;
        for (const int c : order) {
            const int e = parent_edge[static_cast<std::size_t>(c)];
            if (e < 0) continue;
            const Feeder& fd = net.feeders[static_cast<std::size_t>(e)];
            const std::size_t ce = static_cast<std::size_t>(e), cb = static_cast<std::size_t>(c);
            const double next = v2[static_cast<std::size_t>(parent[cb])] -
                                2.0 * (fd.r * fp[ce] + fd.x * fq[ce]) -
                                (fd.r * fd.r + fd.x * fd.x) * isq[ce];
            if (!std::isfinite(next) || next < 1e-9)
                throw Error("distflow_solve: voltage collapse at bus " + net.buses[cb].id +
                            " after " + std::to_string(sweep) +
                            " sweeps; the loading exceeds what this topology can deliver");
            delta = std::max(delta, std::abs(next - v2[cb]));
            v2[cb] = next;
        }
        return delta;
    };

    ExactFlowState st;
    for (st.sweeps = 1;; ++st.sweeps) {
        const double db = backward();
        const double df = forward(st.sweeps);
        if (std::max(db, df) < 1e-12) break;
        if (st.sweeps >= 500)
            throw Error(
                "distflow_solve: no convergence within 500 sweeps; the loading exceeds what this "
                "topology can deliver");
    }
    backward();  // re-anchor flows on the converged voltages

    st.p.assign(nf, 0.0);
    st.q.assign(nf, 0.0);
    st.i_sqr.assign(nf, 0.0);
    st.v_sqr.assign(nb, nan);
    st.gen_p = inj.gen_p;
    st.gen_q = inj.gen_q;
    for (std::size_t i = 0; i < nb; ++i) {
        if (asg.v[i] != 0) st.v_sqr[i] = v2[i];
        if (inj.slack[i]) {
            st.gen_p[i] = dp[i];
            st.gen_q[i] = dq[i];
        }
        if (asg.v[i] == 0) {
            st.gen_p[i] = 0.0;
            st.gen_q[i] = 0.0;
        }
    }
    for (std::size_t i = 0; i < nb; ++i) {
        const int pe = parent_edge[i];
        if (pe < 0) continue;
        const std::size_t e = static_cast<std::size_t>(pe);
        const Feeder& fd = net.feeders[e];
        st.i_sqr[e] = isq[e];
        if (ep.from[e] == static_cast<std::size_t>(parent[i])) {
            st.p[e] = fp[e];
            st.q[e] = fq[e];
        } else {  // stored orientation points child to parent; flow runs against it
            st.p[e] = -(fp[e] + fd.r * isq[e]);
            st.q[e] = -(fq[e] + fd.x * isq[e]);
        }
    }

    st.residual_p.assign(nb, 0.0);
    st.residual_q.assign(nb, 0.0);
    for (std::size_t i = 0; i < nb; ++i) {
        if (asg.v[i] == 0) continue;
        st.residual_p[i] = st.gen_p[i] - inj.load_p[i];
        st.residual_q[i] = st.gen_q[i] - inj.load_q[i];
    }
    for (std::size_t f = 0; f < nf; ++f) {
        if (asg.w[f] == 0) continue;
        const Feeder& fd = net.feeders[f];
        st.residual_p[ep.to[f]] += st.p[f];
        st.residual_q[ep.to[f]] += st.q[f];
        st.residual_p[ep.from[f]] -= st.p[f] + fd.r * st.i_sqr[f];
        st.residual_q[ep.from[f]] -= st.q[f] + fd.x * st.i_sqr[f];
    }
    return st;
}

// ---- structure checking

struct ForestReport {
    bool is_forest = false;        // energized closed feeders are acyclic
    bool endpoints_ok = false;     // no closed feeder touches a dark bus
    bool every_tree_rooted = false;
    bool counting_ok = false;      // closed = energized - trees
    int n_trees = 0;
    std::vector<std::string> notes;

    bool ok() const { return is_forest && endpoints_ok && every_tree_rooted && counting_ok; }
};

inline ForestReport check_forest(const Network& net, const std::vector<int>& v,
                                 const std::vector<int>& w, const std::vector<int>& root_buses) {
    const std::size_t nb = net.buses.size();
    const std::size_t nf = net.feeders.size();
    if (v.size() != nb || w.size() != nf)
        throw Error("check_forest: state shape does not match the network");

    ForestReport rep;
    rep.is_forest = rep.endpoints_ok = rep.every_tree_rooted = rep.counting_ok = true;
    const auto ep = distflow_detail::endpoints(net);
    enum_detail::UnionFind uf(static_cast<int>(nb));
    int closed = 0;
    for (std::size_t f = 0; f < nf; ++f) {
        if (w[f] == 0) continue;
        ++closed;
        const Feeder& fd = net.feeders[f];
        if (v[ep.from[f]] == 0 || v[ep.to[f]] == 0) {
            rep.endpoints_ok = false;
            rep.notes.push_back("closed feeder " + fd.id + " touches a de-energized bus");
            continue;  // walk only the consistently energized part
        }
        if (!uf.join(static_cast<int>(ep.from[f]), static_cast<int>(ep.to[f]))) {
            rep.is_forest = false;
            rep.notes.push_back("feeder " + fd.id + " closes a cycle");
        }
    }

    std::vector<char> rooted(nb, 0);
    for (const int rb : root_buses)
        if (rb >= 0 && rb < static_cast<int>(nb) && v[static_cast<std::size_t>(rb)] != 0)
            rooted[static_cast<std::size_t>(uf.find(rb))] = 1;
    int energized = 0;
    std::vector<char> counted(nb, 0);
    for (std::size_t i = 0; i < nb; ++i) {
        if (v[i] == 0) continue;
        ++energized;
        const std::size_t lead = static_cast<std::size_t>(uf.find(static_cast<int>(i)));
        if (counted[lead]) continue;
        counted[lead] = 1;
        ++rep.n_trees;
        if (!rooted[lead]) {
            rep.every_tree_rooted = false;
            rep.notes.push_back("the tree holding bus " + net.buses[i].id + " has no root");
        }
    }
    if (closed != energized - rep.n_trees) {
        rep.counting_ok = false;
        rep.notes.push_back("edge count " + std::to_string(closed) + " != " +
                            std::to_string(energized) + " buses - " + std::to_string(rep.n_trees) +
                            " trees");
    }
    return rep;
}

inline ForestReport check_forest(const Network& net, const std::vector<int>& v,
                                 const std::vector<int>& w) {
    std::vector<int> roots;
    for (std::size_t i = 0; i < net.buses.size(); ++i)
        if (net.buses[i].is_root) roots.push_back(static_cast<int>(i));
    return check_forest(net, v, w, roots);
}

// ---- brute-force optimum

struct BruteForceResult {
    bool feasible = false;
    BinaryAssignment topology;
    double objective = 0.0;  // exact losses (reconfiguration) or served load (restoration)
    ExactFlowState flow;
};

/// Scores every enumerable configuration with the exact flow, keeping only
/// those whose voltages, currents and reference injections respect the
/// network's operating boxes. Generation away from the references stays idle,
/// so ground truth is only claimed for networks whose sources sit at roots.
inline BruteForceResult brute_force_optimum(const Network& net, const RunConfig& cfg) {
    const auto configs = enumerate_radial_configurations(net, cfg);
    const double tol = 1e-9;
    const double vmin2 = net.v_min * net.v_min, vmax2 = net.v_max * net.v_max;

    auto try_config = [&](const BinaryAssignment& asg, ExactFlowState& out) -> bool {
        ExactFlowState st;
        try {
            st = distflow_solve(net, asg, served_injections(net, asg));
        } catch (const Error&) {
            return false;  // no physical fixed point for this loading
        }
        for (std::size_t i = 0; i < net.buses.size(); ++i) {
            if (asg.v[i] == 0) continue;
            if (st.v_sqr[i] < vmin2 - tol || st.v_sqr[i] > vmax2 + tol) return false;
            const Bus& b = net.buses[i];
            if (st.gen_p[i] < b.gen_p_min - tol || st.gen_p[i] > b.gen_p_max + tol) return false;
            if (st.gen_q[i] < b.gen_q_min - tol || st.gen_q[i] > b.gen_q_max + tol) return false;
        }
        for (std::size_t f = 0; f < net.feeders.size(); ++f)
            if (asg.w[f] != 0 && st.i_sqr[f] > net.feeders[f].i_max * net.feeders[f].i_max + tol)
                return false;
        out = std::move(st);
        return true;
    };

    BruteForceResult best;
    ConfigKey best_key;
    if (cfg.mode == Mode::restoration) {
        // service level is fixed by the bus states, so rank first and keep
        // the first configuration that carries its own load
        std::vector<double> served(configs.size(), 0.0);
        std::vector<ConfigKey> keys(configs.size());
        for (std::size_t c = 0; c < configs.size(); ++c) {
            for (std::size_t i = 0; i < net.buses.size(); ++i)
                if (configs[c].v[i] != 0) served[c] += net.buses[i].load_p;
            keys[c] = config_tie_key(net, configs[c]);
        }
        std::vector<std::size_t> ord(configs.size());
        for (std::size_t c = 0; c < ord.size(); ++c) ord[c] = c;
        std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
            if (served[a] != served[b]) return served[a] > served[b];
            return keys[a] < keys[b];
        });
        for (const std::size_t c : ord) {
            ExactFlowState st;
            if (!try_config(configs[c], st)) continue;
            best.feasible = true;
            best.topology = configs[c];
            best.objective = served[c];
            best.flow = std::move(st);
            break;
        }
    } else {
        for (const auto& asg : configs) {
            ExactFlowState st;
            if (!try_config(asg, st)) continue;
            double loss = 0.0;
            for (std::size_t f = 0; f < net.feeders.size(); ++f)
                loss += net.feeders[f].r * st.i_sqr[f];
            ConfigKey key = config_tie_key(net, asg);
            const double eps = best.feasible ? 1e-12 * (1.0 + std::abs(best.objective)) : 0.0;
            const bool take = !best.feasible || loss < best.objective - eps ||
                              (std::abs(loss - best.objective) <= eps && key < best_key);
            if (take) {
                best.feasible = true;
                best.topology = asg;
                best.objective = loss;
                best.flow = std::move(st);
                best_key = std::move(key);
            }
        }
    }
    return best;
}

// ---- accepted-solution validation

struct OracleValidation {
    ForestReport forest;
    ExactFlowState flow;  // meaningful only when converged
    bool converged = false;
    double exact_loss = 0.0;
    double model_loss = 0.0;
    double loss_tolerance = 0.0;
    double max_v_violation = 0.0;  // squared-voltage distance outside the box
    double max_i_violation = 0.0;  // relative current excess over the rating
    bool loss_ok = false;
    bool voltages_ok = false;
    bool currents_ok = false;
    std::string note;

    bool ok() const {
        return forest.ok() && converged && loss_ok && voltages_ok && currents_ok;
    }
};

/// Re-solves an accepted configuration exactly, with the model's dispatch
/// fixed everywhere but the references, and grades it: forest structure,
/// convergence, operating boxes with reporting slack, and (when minimizing
/// losses) agreement between the modeled and exact losses within the
/// fill-grid's worst-case overshoot.
inline OracleValidation validate_solution(const Network& net, const BinaryAssignment& asg,
                                          const Injections& inj, double model_loss,
                                          const FeederBounds& bounds, int lambda, Mode mode) {
    OracleValidation val;
    val.model_loss = model_loss;
    std::vector<int> roots;
    for (std::size_t i = 0; i < net.buses.size(); ++i)
        if (net.buses[i].is_root) roots.push_back(static_cast<int>(i));
    val.forest = check_forest(net, asg.v, asg.w, roots);
    if (!val.forest.ok()) {
        val.note = "not a rooted forest";
        return val;
    }
    try {
        val.flow = distflow_solve(net, asg, inj);
        val.converged = true;
    } catch (const Error& e) {
        val.note = e.what();
        return val;
    }

    const double vmin2 = net.v_min * net.v_min, vmax2 = net.v_max * net.v_max;
    for (std::size_t i = 0; i < net.buses.size(); ++i) {
        if (asg.v[i] == 0) continue;
        const double over = std::max(vmin2 - val.flow.v_sqr[i], val.flow.v_sqr[i] - vmax2);
        val.max_v_violation = std::max(val.max_v_violation, over);
    }
    val.voltages_ok = val.max_v_violation <= 1e-4;
    const double vns = net.v_norm * net.v_norm;
    for (std::size_t f = 0; f < net.feeders.size(); ++f) {
        const Feeder& fd = net.feeders[f];
        val.exact_loss += fd.r * val.flow.i_sqr[f];
        if (asg.w[f] != 0 && fd.i_max > 0.0) {
            const double rel = std::sqrt(val.flow.i_sqr[f]) / fd.i_max - 1.0;
            val.max_i_violation = std::max(val.max_i_violation, rel);
        }
        if (asg.w[f] != 0)
            val.loss_tolerance += fd.r *
                                  (pwl_max_gap({bounds.p_max[f], lambda}) +
                                   pwl_max_gap({bounds.q_max[f], lambda})) /
                                  vns;
    }
    val.currents_ok = val.max_i_violation <= 1e-3;
    val.loss_tolerance = std::max(val.loss_tolerance, 0.01 * std::abs(val.exact_loss));
    val.loss_ok = mode == Mode::restoration ||
                  std::abs(val.exact_loss - model_loss) <= val.loss_tolerance;
    if (!val.voltages_ok)
        val.note = "voltage outside the operating box";
    else if (!val.currents_ok)
        val.note = "current above its rating";
    else if (!val.loss_ok)
        val.note = "modeled losses disagree with the exact flow";
    return val;
}

}  // namespace lpp
