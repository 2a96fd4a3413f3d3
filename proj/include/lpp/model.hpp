#pragma once

// MILP instance data: variable registry, linear rows, objective, and the
// bookkeeping that lets callers find a bus's or feeder's variables again.
// Rows may carry "switched" bounds that scale with one binary variable, so
// a box like  v*lo <= g <= v*hi  stays a single stored row.

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "network.hpp"

namespace lpp {

enum class VarRole {
    bus_state,
    feeder_state,
    gen_p,
    gen_q,
    load_p,
    load_q,
    v_sqr,
    flow_p,
    flow_q,
    flow_p_plus,
    flow_p_minus,
    flow_q_plus,
    flow_q_minus,
    i_sqr,
    fill_p,
    fill_q,
};

struct VarDef {
    std::string name;
    VarRole role;
    int entity = -1;  // bus or feeder index the variable belongs to
    int seg = -1;     // fill segment number, -1 for everything else
    double lo = 0.0;
    double hi = 0.0;
    bool is_binary = false;
};

// Functional row labels. Power-flow rows: nodal balances, the voltage-drop
// pair, the voltage box, the current cap, and everything tied to the
// linearized current coupling (the big-M pair plus its split/fill rows).
// Topology rows: the tree-counting row, endpoint coupling, the switched
// generation/load boxes and the switched flow caps.
enum class RowTag {
    balance_p,
    balance_q,
    voltage_drop,
    voltage_box,
    current_cap,
    pwl_coupling,
    radiality_count,
    endpoint_coupling,
    gen_p_box,
    gen_q_box,
    load_p_serve,
    load_q_serve,
    flow_p_cap,
    flow_q_cap,
};

inline const char* row_tag_name(RowTag t) {
    switch (t) {
        case RowTag::balance_p: return "balance_p";
        case RowTag::balance_q: return "balance_q";
        case RowTag::voltage_drop: return "voltage_drop";
        case RowTag::voltage_box: return "voltage_box";
        case RowTag::current_cap: return "current_cap";
        case RowTag::pwl_coupling: return "pwl_coupling";
        case RowTag::radiality_count: return "radiality_count";
        case RowTag::endpoint_coupling: return "endpoint_coupling";
        case RowTag::gen_p_box: return "gen_p_box";
        case RowTag::gen_q_box: return "gen_q_box";
        case RowTag::load_p_serve: return "load_p_serve";
        case RowTag::load_q_serve: return "load_q_serve";
        case RowTag::flow_p_cap: return "flow_p_cap";
        case RowTag::flow_q_cap: return "flow_q_cap";
    }
    return "?";
}

inline bool row_tag_is_power_flow(RowTag t) {
    switch (t) {
        case RowTag::balance_p:
        case RowTag::balance_q:
        case RowTag::voltage_drop:
        case RowTag::voltage_box:
        case RowTag::current_cap:
        case RowTag::pwl_coupling:
            return true;
        default:
            return false;
    }
}

struct Row {
    RowTag tag;
    std::string name;
    std::vector<std::pair<int, double>> coeffs;  // (variable index, coefficient)
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    // When switch_var >= 0 the effective bounds are lo + lo_scale*b and
    // hi + hi_scale*b, with b the value of that binary.
    int switch_var = -1;
    double lo_scale = 0.0;
    double hi_scale = 0.0;
};

inline double row_activity(const Row& r, const std::vector<double>& x) {
    double a = 0.0;
    for (const auto& [j, c] : r.coeffs) a += c * x[static_cast<std::size_t>(j)];
    return a;
}

inline double row_lo_at(const Row& r, const std::vector<double>& x) {
    if (r.switch_var < 0) return r.lo;
    return r.lo + r.lo_scale * x[static_cast<std::size_t>(r.switch_var)];
}

inline double row_hi_at(const Row& r, const std::vector<double>& x) {
    if (r.switch_var < 0) return r.hi;
    return r.hi + r.hi_scale * x[static_cast<std::size_t>(r.switch_var)];
}

/// How far the point sits outside the row's effective bounds; 0 when inside.
inline double row_violation(const Row& r, const std::vector<double>& x) {
    const double a = row_activity(r, x);
    double v = 0.0;
    const double lo = row_lo_at(r, x);
    const double hi = row_hi_at(r, x);
    if (a < lo) v = lo - a;
    if (a > hi && a - hi > v) v = a - hi;
    return v;
}

// Per-feeder maxima the fill grids are built on; renewed between iterations.
struct FeederBounds {
    std::vector<double> p_max;
    std::vector<double> q_max;
};

// Relaxation constants actually written into the rows, one slot per feeder
// for the row families that take per-feeder values.
struct BigMValues {
    double m_voltage_box = 0.0;
    std::vector<double> m_voltage_drop;
    std::vector<double> m_coupling;
    std::vector<double> m_current_cap;
    std::vector<double> m_flow_p;
    std::vector<double> m_flow_q;
};

// Variable indices for one bus / one feeder. fill_p / fill_q point at the
// first of lambda consecutive fill slots.
struct BusVars {
    int state, gen_p, gen_q, load_p, load_q, v_sqr;
};
struct FeederVars {
    int state, p, q, p_plus, p_minus, q_plus, q_minus, i_sqr, fill_p, fill_q;
};

enum class ObjSense { minimize, maximize };

struct MilpModel {
    Mode mode = Mode::reconfiguration;
    int lambda = 0;
    double v_norm_sqr = 1.0;
    std::vector<VarDef> vars;
    std::vector<Row> rows;
    ObjSense sense = ObjSense::minimize;
    std::vector<std::pair<int, double>> objective;
    // r-weighted squared currents, kept for both modes: with all binaries
    // fixed the serving objective is a constant, so subproblem solvers
    // minimize this instead to pin down the physical flow among equals.
    std::vector<std::pair<int, double>> loss_objective;
    std::vector<BusVars> bus_vars;
    std::vector<FeederVars> feeder_vars;
    FeederBounds bounds;  // fill-grid maxima the instance was built with
    BigMValues big_m;

    int n_buses() const { return static_cast<int>(bus_vars.size()); }
    int n_feeders() const { return static_cast<int>(feeder_vars.size()); }
};

struct CountRecord {
    int binaries = 0;
    int continuums = 0;
    int pf_rows = 0;
    int topology_rows = 0;
};

/// Tally variables and rows and check them against the closed-form counts
/// for this model shape; a mismatch means the builder emitted a wrong
/// structure and is reported as an error naming the discrepant category.
inline CountRecord count_model(const MilpModel& m) {
    CountRecord rec;
    for (const auto& v : m.vars) (v.is_binary ? rec.binaries : rec.continuums)++;
    for (const auto& r : m.rows) (row_tag_is_power_flow(r.tag) ? rec.pf_rows : rec.topology_rows)++;

    const int nf = m.n_feeders();
    const int nb = m.n_buses();
    const int lam = m.lambda;
    const int want_bin = nf + nb;
    const int want_cont = (7 + 2 * lam) * nf + 5 * nb;
    const int want_pf = (13 + 2 * lam) * nf + 3 * nb;
    const int want_topo = 3 * nf + 4 * nb + 1;
    auto fail = [](const char* what, int got, int want) {
        throw Error(std::string("count_model: ") + what + " count " + std::to_string(got) +
                    " does not match the closed form " + std::to_string(want));
    };
    if (rec.binaries != want_bin) fail("binary variable", rec.binaries, want_bin);
    if (rec.continuums != want_cont) fail("continuous variable", rec.continuums, want_cont);
    if (rec.pf_rows != want_pf) fail("power-flow row", rec.pf_rows, want_pf);
    if (rec.topology_rows != want_topo) fail("topology row", rec.topology_rows, want_topo);
    return rec;
}

}  // namespace lpp
