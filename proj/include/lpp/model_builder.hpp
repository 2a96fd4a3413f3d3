#pragma once

// Assembles the switched linearized power-flow MILP for one network and one
// set of per-feeder fill-grid maxima. Emission order is fixed so two builds
// of the same inputs are identical: power-flow rows first (per bus, then per
// feeder), topology rows second.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "model.hpp"
#include "network.hpp"
#include "pwl.hpp"

namespace lpp {

namespace detail {

inline void check_bounds_cover(const Network& net, const FeederBounds& bounds) {
    if (bounds.p_max.size() != net.feeders.size() || bounds.q_max.size() != net.feeders.size())
        throw Error("fill-grid bounds must cover every feeder (have " +
                    std::to_string(bounds.p_max.size()) + "/" + std::to_string(bounds.q_max.size()) +
                    ", need " + std::to_string(net.feeders.size()) + ")");
    for (std::size_t f = 0; f < net.feeders.size(); ++f)
        if (!(bounds.p_max[f] > 0.0) || !(bounds.q_max[f] > 0.0) ||
            !std::isfinite(bounds.p_max[f]) || !std::isfinite(bounds.q_max[f]))
            throw Error("fill-grid bound for feeder " + net.feeders[f].id + " must be positive");
}

}  // namespace detail

/// Relaxation constants per row family. The tight policy derives each value
/// from the variable boxes so that a de-energized element can always satisfy
/// its relaxed rows; the fixed policy stamps one configured scalar everywhere.
inline BigMValues big_m_values(const Network& net, const FeederBounds& bounds,
                               const BigMPolicy& policy = BigMPolicy::tight_policy()) {
    detail::check_bounds_cover(net, bounds);
    BigMValues m;
    const std::size_t nf = net.feeders.size();
    m.m_voltage_drop.resize(nf);
    m.m_coupling.resize(nf);
    m.m_current_cap.resize(nf);
    m.m_flow_p.resize(nf);
    m.m_flow_q.resize(nf);
    if (!policy.tight) {
        m.m_voltage_box = policy.fixed;
        for (std::size_t f = 0; f < nf; ++f) {
            m.m_voltage_drop[f] = policy.fixed;
            m.m_coupling[f] = policy.fixed;
            m.m_current_cap[f] = policy.fixed;
            m.m_flow_p[f] = policy.fixed;
            m.m_flow_q[f] = policy.fixed;
        }
        return m;
    }
    const double vmax2 = net.v_max * net.v_max;
    const double vmin2 = net.v_min * net.v_min;
    m.m_voltage_box = vmax2;
    for (std::size_t f = 0; f < nf; ++f) {
        const Feeder& fd = net.feeders[f];
        const double imax2 = fd.i_max * fd.i_max;
        const double pm = bounds.p_max[f];
        const double qm = bounds.q_max[f];
        // Worst case of the drop expression over the variable boxes: the
        // voltage window width, the largest resistive+reactive drop, and the
        // series-impedance correction at full current.
        m.m_voltage_drop[f] =
            (vmax2 - vmin2) + 2.0 * (fd.r * pm + std::abs(fd.x) * qm) + (fd.r * fd.r + fd.x * fd.x) * imax2;
        m.m_coupling[f] = pm * pm + qm * qm + vmax2 * imax2;
        m.m_current_cap[f] = imax2;
        m.m_flow_p[f] = pm;
        m.m_flow_q[f] = qm;
    }
    return m;
}

/// Build the full MILP for the given mode. Fixed input states become variable
/// fixings; reconfiguration additionally pins every still-free bus energized.
inline MilpModel build_model(const Network& net, const RunConfig& cfg, const FeederBounds& bounds) {
    detail::check_bounds_cover(net, bounds);
    pwl_check_spec(PwlSpec{1.0, cfg.lambda}, "build_model");  // reject a bad segment count early

    int root_count = 0;
    for (const auto& b : net.buses) root_count += b.is_root ? 1 : 0;
    if (!cfg.n_s.derived) {
        if (cfg.n_s.fixed_value < 0 || cfg.n_s.fixed_value > root_count)
            throw Error("fixed tree count " + std::to_string(cfg.n_s.fixed_value) +
                        " is outside [0, root-capable buses = " + std::to_string(root_count) + "]");
    }

    MilpModel m;
    m.mode = cfg.mode;
    m.lambda = cfg.lambda;
    m.v_norm_sqr = net.v_norm * net.v_norm;
    m.bounds = bounds;
    m.big_m = big_m_values(net, bounds, cfg.big_m);

    const double inf = std::numeric_limits<double>::infinity();
    const std::size_t nb = net.buses.size();
    const std::size_t nf = net.feeders.size();
    const double vmax2 = net.v_max * net.v_max;
    const double vmin2 = net.v_min * net.v_min;

    auto add_var = [&m](const std::string& name, VarRole role, int entity, int seg, double lo,
                        double hi, bool binary) {
        m.vars.push_back(VarDef{name, role, entity, seg, lo, hi, binary});
        return static_cast<int>(m.vars.size()) - 1;
    };

    // ---- variables: binaries first, then per-bus, then per-feeder blocks
    m.bus_vars.resize(nb);
    m.feeder_vars.resize(nf);
    for (std::size_t i = 0; i < nb; ++i) {
        const Bus& b = net.buses[i];
        double lo = 0.0, hi = 1.0;
        if (b.fixed_state == BusState::energized) lo = hi = 1.0;
        if (b.fixed_state == BusState::de_energized) lo = hi = 0.0;
        // Every served bus is part of the objective in reconfiguration, so a
        // bus left free by the input is pinned energized there.
        if (cfg.mode == Mode::reconfiguration && b.fixed_state == BusState::free_state) lo = hi = 1.0;
        m.bus_vars[i].state =
            add_var("v[" + b.id + "]", VarRole::bus_state, static_cast<int>(i), -1, lo, hi, true);
    }
    for (std::size_t f = 0; f < nf; ++f) {
        const Feeder& fd = net.feeders[f];
        double lo = 0.0, hi = 1.0;
        if (!fd.switchable) lo = hi = 1.0;  // a line without a switch stays in service
        if (fd.fixed_state == FeederState::closed) lo = hi = 1.0;
        if (fd.fixed_state == FeederState::open) lo = hi = 0.0;
        m.feeder_vars[f].state =
            add_var("w[" + fd.id + "]", VarRole::feeder_state, static_cast<int>(f), -1, lo, hi, true);
    }
    for (std::size_t i = 0; i < nb; ++i) {
        const Bus& b = net.buses[i];
        BusVars& bv = m.bus_vars[i];
        const int e = static_cast<int>(i);
        // Boxes widened to include 0 so a de-energized bus stays feasible.
        bv.gen_p = add_var("gen_p[" + b.id + "]", VarRole::gen_p, e, -1, std::min(0.0, b.gen_p_min),
                           std::max(0.0, b.gen_p_max), false);
        bv.gen_q = add_var("gen_q[" + b.id + "]", VarRole::gen_q, e, -1, std::min(0.0, b.gen_q_min),
                           std::max(0.0, b.gen_q_max), false);
        bv.load_p = add_var("load_p[" + b.id + "]", VarRole::load_p, e, -1, std::min(0.0, b.load_p),
                            std::max(0.0, b.load_p), false);
        bv.load_q = add_var("load_q[" + b.id + "]", VarRole::load_q, e, -1, std::min(0.0, b.load_q),
                            std::max(0.0, b.load_q), false);
        bv.v_sqr = add_var("v_sqr[" + b.id + "]", VarRole::v_sqr, e, -1, 0.0,
                           vmax2 + m.big_m.m_voltage_box, false);
    }
    for (std::size_t f = 0; f < nf; ++f) {
        const Feeder& fd = net.feeders[f];
        FeederVars& fv = m.feeder_vars[f];
        const int e = static_cast<int>(f);
        const double pm = bounds.p_max[f];
        const double qm = bounds.q_max[f];
        fv.p = add_var("p[" + fd.id + "]", VarRole::flow_p, e, -1, -pm, pm, false);
        fv.q = add_var("q[" + fd.id + "]", VarRole::flow_q, e, -1, -qm, qm, false);
        fv.p_plus = add_var("p_plus[" + fd.id + "]", VarRole::flow_p_plus, e, -1, 0.0, pm, false);
        fv.p_minus = add_var("p_minus[" + fd.id + "]", VarRole::flow_p_minus, e, -1, 0.0, pm, false);
        fv.q_plus = add_var("q_plus[" + fd.id + "]", VarRole::flow_q_plus, e, -1, 0.0, qm, false);
        fv.q_minus = add_var("q_minus[" + fd.id + "]", VarRole::flow_q_minus, e, -1, 0.0, qm, false);
        fv.i_sqr = add_var("i_sqr[" + fd.id + "]", VarRole::i_sqr, e, -1, 0.0,
                           fd.i_max * fd.i_max + m.big_m.m_current_cap[f], false);
        const double wp = pm / cfg.lambda;
        const double wq = qm / cfg.lambda;
        fv.fill_p = static_cast<int>(m.vars.size());
        for (int k = 0; k < cfg.lambda; ++k)
            add_var("dp[" + fd.id + "," + std::to_string(k) + "]", VarRole::fill_p, e, k, 0.0, wp,
                    false);
        fv.fill_q = static_cast<int>(m.vars.size());
        for (int k = 0; k < cfg.lambda; ++k)
            add_var("dq[" + fd.id + "," + std::to_string(k) + "]", VarRole::fill_q, e, k, 0.0, wq,
                    false);
    }

    // Row emission below keeps references into m.rows alive while sibling rows
    // are created (balance pairs, the drop and coupling pairs share fill
    // loops), so the vector must never reallocate once add_row starts.  The
    // row total is known up front; reserve it and treat growth past the
    // reservation as a hard error instead of silently invalidating references.
    m.rows.reserve((16 + 2 * static_cast<std::size_t>(cfg.lambda)) * nf + 7 * nb + 1);
    auto add_row = [&m](RowTag tag, std::string name) -> Row& {
        if (m.rows.size() == m.rows.capacity())
            throw Error("build_model: row reservation exhausted, emission would reallocate");
        m.rows.push_back(Row{tag, std::move(name), {}, 0.0, 0.0, -1, 0.0, 0.0});
        return m.rows.back();
    };

    // ---- power-flow rows, per bus: nodal balances and the switched voltage box
    for (std::size_t i = 0; i < nb; ++i) {
        const Bus& b = net.buses[i];
        const BusVars& bv = m.bus_vars[i];
        Row& bp = add_row(RowTag::balance_p, "balance_p[" + b.id + "]");
        Row& bq = add_row(RowTag::balance_q, "balance_q[" + b.id + "]");
        // Receiving-end accounting: the flow on a feeder is what arrives at
        // its to-bus; the from-bus additionally covers the series loss.
        for (std::size_t f = 0; f < nf; ++f) {
            const Feeder& fd = net.feeders[f];
            const FeederVars& fv = m.feeder_vars[f];
            if (net.bus_index(fd.to) == i) {
                bp.coeffs.push_back({fv.p, 1.0});
                bq.coeffs.push_back({fv.q, 1.0});
            }
            if (net.bus_index(fd.from) == i) {
                bp.coeffs.push_back({fv.p, -1.0});
                bp.coeffs.push_back({fv.i_sqr, -fd.r});
                bq.coeffs.push_back({fv.q, -1.0});
                bq.coeffs.push_back({fv.i_sqr, -fd.x});
            }
        }
        bp.coeffs.push_back({bv.gen_p, 1.0});
        bp.coeffs.push_back({bv.load_p, -1.0});
        bq.coeffs.push_back({bv.gen_q, 1.0});
        bq.coeffs.push_back({bv.load_q, -1.0});
        bp.lo = bp.hi = 0.0;
        bq.lo = bq.hi = 0.0;

        Row& box = add_row(RowTag::voltage_box, "voltage_box[" + b.id + "]");
        box.coeffs.push_back({bv.v_sqr, 1.0});
        box.switch_var = bv.state;
        box.lo = vmin2 - m.big_m.m_voltage_box;
        box.lo_scale = m.big_m.m_voltage_box;
        box.hi = vmax2 + m.big_m.m_voltage_box;
        box.hi_scale = -m.big_m.m_voltage_box;
    }

    // ---- power-flow rows, per feeder
    for (std::size_t f = 0; f < nf; ++f) {
        const Feeder& fd = net.feeders[f];
        const FeederVars& fv = m.feeder_vars[f];
        const int vi = m.bus_vars[net.bus_index(fd.from)].v_sqr;
        const int vj = m.bus_vars[net.bus_index(fd.to)].v_sqr;
        const double z2 = fd.r * fd.r + fd.x * fd.x;
        const double m9 = m.big_m.m_voltage_drop[f];
        const double m26 = m.big_m.m_coupling[f];

        // drop identity relaxed both ways when the feeder is open:
        //   |v_from^2 - v_to^2 - 2(r p + x q) - z^2 i_sqr| <= M (1 - w)
        {
            Row& lo = add_row(RowTag::voltage_drop, "voltage_drop_lo[" + fd.id + "]");
            lo.coeffs = {{vi, 1.0}, {vj, -1.0}, {fv.p, -2.0 * fd.r}, {fv.q, -2.0 * fd.x},
                         {fv.i_sqr, -z2}, {fv.state, -m9}};
            lo.lo = -m9;
            lo.hi = inf;
            Row& hi = add_row(RowTag::voltage_drop, "voltage_drop_hi[" + fd.id + "]");
            hi.coeffs = {{vi, 1.0}, {vj, -1.0}, {fv.p, -2.0 * fd.r}, {fv.q, -2.0 * fd.x},
                         {fv.i_sqr, -z2}, {fv.state, m9}};
            hi.lo = -inf;
            hi.hi = m9;
        }

        {
            Row& cap = add_row(RowTag::current_cap, "current_cap[" + fd.id + "]");
            cap.coeffs = {{fv.i_sqr, 1.0}, {fv.state, m.big_m.m_current_cap[f]}};
            cap.lo = -inf;
            cap.hi = fd.i_max * fd.i_max + m.big_m.m_current_cap[f];
        }

        // linearized current coupling: v_norm^2 i_sqr pinned to the fill
        // values of both axes while the feeder is closed, free otherwise
        const std::vector<double> sp = pwl_slopes(PwlSpec{bounds.p_max[f], cfg.lambda});
        const std::vector<double> sq = pwl_slopes(PwlSpec{bounds.q_max[f], cfg.lambda});
        {
            Row& lo = add_row(RowTag::pwl_coupling, "pwl_pair_lo[" + fd.id + "]");
            Row& hi = add_row(RowTag::pwl_coupling, "pwl_pair_hi[" + fd.id + "]");
            for (Row* r : {&lo, &hi}) {
                r->coeffs.push_back({fv.i_sqr, m.v_norm_sqr});
                for (int k = 0; k < cfg.lambda; ++k) r->coeffs.push_back({fv.fill_p + k, -sp[k]});
                for (int k = 0; k < cfg.lambda; ++k) r->coeffs.push_back({fv.fill_q + k, -sq[k]});
            }
            lo.coeffs.push_back({fv.state, -m26});
            lo.lo = -m26;
            lo.hi = inf;
            hi.coeffs.push_back({fv.state, m26});
            hi.lo = -inf;
            hi.hi = m26;
        }
        for (int axis = 0; axis < 2; ++axis) {
            const char* ax = axis == 0 ? "p" : "q";
            const int y = axis == 0 ? fv.p : fv.q;
            const int y_plus = axis == 0 ? fv.p_plus : fv.q_plus;
            const int y_minus = axis == 0 ? fv.p_minus : fv.q_minus;
            const int fill = axis == 0 ? fv.fill_p : fv.fill_q;
            const double width = (axis == 0 ? bounds.p_max[f] : bounds.q_max[f]) / cfg.lambda;

            Row& split = add_row(RowTag::pwl_coupling,
                                 "pwl_split_" + std::string(ax) + "[" + fd.id + "]");
            split.coeffs = {{y, 1.0}, {y_plus, -1.0}, {y_minus, 1.0}};
            split.lo = split.hi = 0.0;

            Row& sum = add_row(RowTag::pwl_coupling,
                               "pwl_sum_" + std::string(ax) + "[" + fd.id + "]");
            sum.coeffs.push_back({y_plus, 1.0});
            sum.coeffs.push_back({y_minus, 1.0});
            for (int k = 0; k < cfg.lambda; ++k) sum.coeffs.push_back({fill + k, -1.0});
            sum.lo = sum.hi = 0.0;

            for (int k = 0; k < cfg.lambda; ++k) {
                Row& fr = add_row(RowTag::pwl_coupling, "pwl_fill_" + std::string(ax) + "[" +
                                                            fd.id + "," + std::to_string(k) + "]");
                fr.coeffs = {{fill + k, 1.0}};
                fr.lo = 0.0;
                fr.hi = width;
            }
            Row& np = add_row(RowTag::pwl_coupling,
                              "pwl_nonneg_" + std::string(ax) + "_plus[" + fd.id + "]");
            np.coeffs = {{y_plus, 1.0}};
            np.lo = 0.0;
            np.hi = inf;
            Row& nm = add_row(RowTag::pwl_coupling,
                              "pwl_nonneg_" + std::string(ax) + "_minus[" + fd.id + "]");
            nm.coeffs = {{y_minus, 1.0}};
            nm.lo = 0.0;
            nm.hi = inf;
        }
    }

    // ---- topology rows
    {
        // closed feeders = energized buses - trees; with the derived policy the
        // tree count is the number of energized root-capable buses, so those
        // state variables move to the left-hand side and cancel.
        Row& rad = add_row(RowTag::radiality_count, "radiality_count");
        for (std::size_t f = 0; f < nf; ++f) rad.coeffs.push_back({m.feeder_vars[f].state, 1.0});
        if (cfg.n_s.derived) {
            for (std::size_t i = 0; i < nb; ++i)
                if (!net.buses[i].is_root) rad.coeffs.push_back({m.bus_vars[i].state, -1.0});
            rad.lo = rad.hi = 0.0;
        } else {
            for (std::size_t i = 0; i < nb; ++i) rad.coeffs.push_back({m.bus_vars[i].state, -1.0});
            rad.lo = rad.hi = -static_cast<double>(cfg.n_s.fixed_value);
        }
    }
    for (std::size_t f = 0; f < nf; ++f) {
        const Feeder& fd = net.feeders[f];
        const FeederVars& fv = m.feeder_vars[f];
        Row& ep = add_row(RowTag::endpoint_coupling, "endpoint_coupling[" + fd.id + "]");
        ep.coeffs = {{fv.state, 2.0},
                     {m.bus_vars[net.bus_index(fd.from)].state, -1.0},
                     {m.bus_vars[net.bus_index(fd.to)].state, -1.0}};
        ep.lo = -inf;
        ep.hi = 0.0;

        Row& pc = add_row(RowTag::flow_p_cap, "flow_p_cap[" + fd.id + "]");
        pc.coeffs = {{fv.p, 1.0}};
        pc.switch_var = fv.state;
        pc.lo = 0.0;
        pc.lo_scale = -m.big_m.m_flow_p[f];
        pc.hi = 0.0;
        pc.hi_scale = m.big_m.m_flow_p[f];

        Row& qc = add_row(RowTag::flow_q_cap, "flow_q_cap[" + fd.id + "]");
        qc.coeffs = {{fv.q, 1.0}};
        qc.switch_var = fv.state;
        qc.lo = 0.0;
        qc.lo_scale = -m.big_m.m_flow_q[f];
        qc.hi = 0.0;
        qc.hi_scale = m.big_m.m_flow_q[f];
    }
    for (std::size_t i = 0; i < nb; ++i) {
        const Bus& b = net.buses[i];
        const BusVars& bv = m.bus_vars[i];
        auto box = [&](RowTag tag, const char* what, int var, double lo_c, double hi_c) {
            Row& r = add_row(tag, std::string(what) + "[" + b.id + "]");
            r.coeffs = {{var, 1.0}};
            r.switch_var = bv.state;
            r.lo = 0.0;
            r.lo_scale = lo_c;
            r.hi = 0.0;
            r.hi_scale = hi_c;
        };
        box(RowTag::gen_p_box, "gen_p_box", bv.gen_p, b.gen_p_min, b.gen_p_max);
        box(RowTag::gen_q_box, "gen_q_box", bv.gen_q, b.gen_q_min, b.gen_q_max);
        // Both serve scales equal the nominal demand: load pickup is all or nothing.
        box(RowTag::load_p_serve, "load_p_serve", bv.load_p, b.load_p, b.load_p);
        box(RowTag::load_q_serve, "load_q_serve", bv.load_q, b.load_q, b.load_q);
    }

    // ---- objective
    for (std::size_t f = 0; f < nf; ++f)
        m.loss_objective.push_back({m.feeder_vars[f].i_sqr, net.feeders[f].r});
    if (cfg.mode == Mode::reconfiguration) {
        m.sense = ObjSense::minimize;
        m.objective = m.loss_objective;
    } else {
        m.sense = ObjSense::maximize;
        for (std::size_t i = 0; i < nb; ++i) m.objective.push_back({m.bus_vars[i].load_p, 1.0});
    }
    return m;
}

}  // namespace lpp
