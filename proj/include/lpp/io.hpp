#pragma once

// Network file loading/saving and run-report serialization.  The network
// format is a JSON document (schema in data/network.schema.json): metadata
// and voltage band at the top, then bus and feeder lists.  Powers are MW and
// Mvar, impedances ohms and ampacities amperes by default; a file-wide
// "units" object (with per-feeder overrides for impedance and ampacity) can
// declare any group as already per-unit.  save_network always writes
// per-unit, so a load/save/load cycle reproduces the Network bit for bit.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "distflow.hpp"
#include "multistep.hpp"
#include "network.hpp"

namespace lpp {

using json = nlohmann::ordered_json;

namespace io_detail {

// Schema errors carry the path of the offending field so a bad file is
// fixable without reading the parser.
inline Error schema_error(const std::string& path, const std::string& what) {
    return Error("network file: " + path + ": " + what);
}

inline const json& need(const json& obj, const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw schema_error(path + "." + key, "missing required field");
    return *it;
}

inline double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw schema_error(path, "expected a number");
    return v.get<double>();
}

inline std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw schema_error(path, "expected a string");
    return v.get<std::string>();
}

inline bool as_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) throw schema_error(path, "expected true or false");
    return v.get<bool>();
}

inline double opt_number(const json& obj, const std::string& path, const char* key,
                         double fallback) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : as_number(*it, path + "." + key);
}

inline bool opt_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : as_bool(*it, path + "." + key);
}

inline std::string opt_string(const json& obj, const std::string& path, const char* key,
                              const std::string& fallback) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : as_string(*it, path + "." + key);
}

// [min, max] pair for a generation bound.
inline std::pair<double, double> opt_range(const json& obj, const std::string& path,
                                           const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return {0.0, 0.0};
    const std::string p = path + "." + key;
    if (!it->is_array() || it->size() != 2) throw schema_error(p, "expected [min, max]");
    return {as_number((*it)[0], p + "[0]"), as_number((*it)[1], p + "[1]")};
}

inline BusState bus_state_from(const std::string& s, const std::string& path) {
    if (s == "free") return BusState::free_state;
    if (s == "energized") return BusState::energized;
    if (s == "de-energized") return BusState::de_energized;
    throw schema_error(path, "state must be free, energized or de-energized, got \"" + s + "\"");
}

inline FeederState feeder_state_from(const std::string& s, const std::string& path) {
    if (s == "free") return FeederState::free_state;
    if (s == "closed") return FeederState::closed;
    if (s == "open") return FeederState::open;
    throw schema_error(path, "state must be free, closed or open, got \"" + s + "\"");
}

inline const char* bus_state_name(BusState s) {
    switch (s) {
        case BusState::free_state: return "free";
        case BusState::energized: return "energized";
        case BusState::de_energized: return "de-energized";
    }
    return "?";
}

inline const char* feeder_state_name(FeederState s) {
    switch (s) {
        case FeederState::free_state: return "free";
        case FeederState::closed: return "closed";
        case FeederState::open: return "open";
    }
    return "?";
}

struct UnitChoices {
    bool power_pu = false;
    bool impedance_pu = false;
    bool ampacity_pu = false;
};

inline UnitChoices unit_choices(const json& doc, const std::string& path) {
    UnitChoices u;
    auto it = doc.find("units");
    if (it == doc.end()) return u;
    const std::string p = path + ".units";
    if (!it->is_object()) throw schema_error(p, "expected an object");
    auto pick = [&](const char* key, const char* eng) {
        const std::string v = opt_string(*it, p, key, eng);
        if (v == "pu") return true;
        if (v == eng) return false;
        throw schema_error(p + "." + key,
                           "unit must be \"" + std::string(eng) + "\" or \"pu\", got \"" + v +
                               "\"");
    };
    u.power_pu = pick("power", "mw");
    u.impedance_pu = pick("impedance", "ohm");
    u.ampacity_pu = pick("ampacity", "ampere");
    return u;
}

}  // namespace io_detail

/// Parse a network document from text.  `origin` names the source in
/// diagnostics (a file path or "<string>").
inline Network parse_network(const std::string& text, const std::string& origin = "<string>") {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error("network file " + origin + ": " + e.what());
    }
    using namespace io_detail;
    const std::string top = origin;
    if (!doc.is_object()) throw schema_error(top, "top level must be an object");

    Network net;
    net.name = opt_string(doc, top, "name", "");
    net.base_mva = as_number(need(doc, top, "base_mva"), top + ".base_mva");
    net.base_kv = as_number(need(doc, top, "base_kv"), top + ".base_kv");
    if (!(net.base_mva > 0.0) || !(net.base_kv > 0.0))
        throw schema_error(top, "base_mva and base_kv must be positive");
    net.v_norm = opt_number(doc, top, "v_norm", 1.0);
    net.v_min = opt_number(doc, top, "v_min", 0.95);
    net.v_max = opt_number(doc, top, "v_max", 1.05);

    const UnitChoices units = unit_choices(doc, top);
    const double p_div = units.power_pu ? 1.0 : net.base_mva;
    const double z_div = impedance_base_ohm(net.base_mva, net.base_kv);
    const double i_div = current_base_ampere(net.base_mva, net.base_kv);

    const json& buses = need(doc, top, "buses");
    if (!buses.is_array()) throw schema_error(top + ".buses", "expected an array");
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const std::string p = top + ".buses[" + std::to_string(i) + "]";
        const json& jb = buses[i];
        if (!jb.is_object()) throw schema_error(p, "expected an object");
        Bus b;
        b.id = as_string(need(jb, p, "id"), p + ".id");
        if (b.id.empty()) throw schema_error(p + ".id", "bus id must be nonempty");
        if (net.has_bus(b.id)) throw schema_error(p + ".id", "duplicate bus id \"" + b.id + "\"");
        b.is_root = opt_bool(jb, p, "root", false);
        b.load_p = opt_number(jb, p, "load_p", 0.0) / p_div;
        b.load_q = opt_number(jb, p, "load_q", 0.0) / p_div;
        auto [pmin, pmax] = opt_range(jb, p, "gen_p");
        auto [qmin, qmax] = opt_range(jb, p, "gen_q");
        b.gen_p_min = pmin / p_div;
        b.gen_p_max = pmax / p_div;
        b.gen_q_min = qmin / p_div;
        b.gen_q_max = qmax / p_div;
        b.fixed_state = bus_state_from(opt_string(jb, p, "state", "free"), p + ".state");
        net.buses.push_back(std::move(b));
    }

    const json& feeders = need(doc, top, "feeders");
    if (!feeders.is_array()) throw schema_error(top + ".feeders", "expected an array");
    for (std::size_t i = 0; i < feeders.size(); ++i) {
        const std::string p = top + ".feeders[" + std::to_string(i) + "]";
        const json& jf = feeders[i];
        if (!jf.is_object()) throw schema_error(p, "expected an object");
        Feeder f;
        f.id = as_string(need(jf, p, "id"), p + ".id");
        if (f.id.empty()) throw schema_error(p + ".id", "feeder id must be nonempty");
        for (const auto& other : net.feeders)
            if (other.id == f.id)
                throw schema_error(p + ".id", "duplicate feeder id \"" + f.id + "\"");
        f.from = as_string(need(jf, p, "from"), p + ".from");
        f.to = as_string(need(jf, p, "to"), p + ".to");
        const bool z_pu =
            opt_string(jf, p, "impedance_unit", units.impedance_pu ? "pu" : "ohm") == "pu";
        const bool a_pu =
            opt_string(jf, p, "ampacity_unit", units.ampacity_pu ? "pu" : "ampere") == "pu";
        f.r = as_number(need(jf, p, "r"), p + ".r") / (z_pu ? 1.0 : z_div);
        f.x = as_number(need(jf, p, "x"), p + ".x") / (z_pu ? 1.0 : z_div);
        f.i_max = as_number(need(jf, p, "i_max"), p + ".i_max") / (a_pu ? 1.0 : i_div);
        f.switchable = opt_bool(jf, p, "switchable", true);
        f.fixed_state = feeder_state_from(opt_string(jf, p, "state", "free"), p + ".state");
        net.feeders.push_back(std::move(f));
    }

    ValidationReport rep = validate_network(net);
    if (!rep.ok()) {
        std::string msg = "network file " + origin + " failed validation:";
        for (const auto& v : rep.violations) {
            msg += "\n  [" + v.code + "]";
            if (!v.where.empty()) msg += " " + v.where + ":";
            msg += " " + v.message;
        }
        throw Error(msg);
    }
    return net;
}

inline Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open network file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_network(buf.str(), path);
}

/// Serialize in per-unit with every field explicit, so parsing the result
/// reproduces the input Network exactly.
inline std::string serialize_network(const Network& net) {
    using namespace io_detail;
    json doc;
    doc["name"] = net.name;
    doc["base_mva"] = net.base_mva;
    doc["base_kv"] = net.base_kv;
    doc["v_norm"] = net.v_norm;
    doc["v_min"] = net.v_min;
    doc["v_max"] = net.v_max;
    doc["units"] = {{"power", "pu"}, {"impedance", "pu"}, {"ampacity", "pu"}};
    doc["buses"] = json::array();
    for (const auto& b : net.buses) {
        json jb;
        jb["id"] = b.id;
        jb["root"] = b.is_root;
        jb["load_p"] = b.load_p;
        jb["load_q"] = b.load_q;
        jb["gen_p"] = {b.gen_p_min, b.gen_p_max};
        jb["gen_q"] = {b.gen_q_min, b.gen_q_max};
        jb["state"] = bus_state_name(b.fixed_state);
        doc["buses"].push_back(std::move(jb));
    }
    doc["feeders"] = json::array();
    for (const auto& f : net.feeders) {
        json jf;
        jf["id"] = f.id;
        jf["from"] = f.from;
        jf["to"] = f.to;
        jf["r"] = f.r;
        jf["x"] = f.x;
        jf["i_max"] = f.i_max;
        jf["switchable"] = f.switchable;
        jf["state"] = feeder_state_name(f.fixed_state);
        doc["feeders"].push_back(std::move(jf));
    }
    return doc.dump(2) + "\n";
}

inline void save_network(const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write network file: " + path);
    out << serialize_network(net);
    if (!out) throw Error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// run reports

enum class ReportFormat { json_doc, table };

/// Copy with every wall-clock field zeroed; golden-file comparisons go
/// through this so timing noise never breaks them.
inline RunReport zero_timing(RunReport rep) {
    rep.total_wall_time = 0.0;
    rep.final.wall_time = 0.0;
    for (auto& it : rep.iterations) {
        it.wall_time = 0.0;
        it.solution.wall_time = 0.0;
    }
    return rep;
}

namespace io_detail {

inline json finite_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

inline json solution_to_json(const Solution& sol, const Network& net) {
    json js;
    js["status"] = solve_status_name(sol.status);
    js["objective"] = sol.objective;
    js["achieved_gap"] = sol.achieved_gap;
    js["wall_time"] = sol.wall_time;
    // de-energized buses have no voltage; their entry is null rather than a
    // number a consumer might mistake for a measurement
    if (sol.v.size() == net.buses.size()) {
        js["buses"] = json::array();
        for (std::size_t i = 0; i < net.buses.size(); ++i) {
            json jb;
            jb["id"] = net.buses[i].id;
            jb["energized"] = sol.v[i];
            jb["v_sqr"] = finite_or_null(sol.v_sqr[i]);
            jb["gen_p"] = sol.p_gen[i];
            jb["gen_q"] = sol.q_gen[i];
            jb["load_p"] = sol.p_load[i];
            jb["load_q"] = sol.q_load[i];
            js["buses"].push_back(std::move(jb));
        }
    }
    if (sol.w.size() == net.feeders.size()) {
        js["feeders"] = json::array();
        for (std::size_t f = 0; f < net.feeders.size(); ++f) {
            json jf;
            jf["id"] = net.feeders[f].id;
            jf["closed"] = sol.w[f];
            jf["p"] = sol.p_flow[f];
            jf["q"] = sol.q_flow[f];
            jf["i_sqr"] = sol.i_sqr[f];
            js["feeders"].push_back(std::move(jf));
        }
    }
    return js;
}

inline json indices_to_json(const ErrorIndices& ix) {
    json jx;
    jx["e_p_mean"] = finite_or_null(ix.e_p_mean);
    jx["e_q_mean"] = finite_or_null(ix.e_q_mean);
    jx["empty_in_use"] = ix.empty_in_use;
    jx["excluded_p"] = ix.excluded_p;
    jx["excluded_q"] = ix.excluded_q;
    jx["per_feeder"] = json::array();
    for (const auto& id : ix.in_use) {
        const auto& [ep, eq] = ix.per_feeder.at(id);
        json row;
        row["feeder"] = id;
        row["e_p"] = finite_or_null(ep);
        row["e_q"] = finite_or_null(eq);
        jx["per_feeder"].push_back(std::move(row));
    }
    return jx;
}

struct RestoredCounts {
    int feeders = 0;
    int buses = 0;
    int islands = 0;
};

inline RestoredCounts restored_counts(const Network& net, const Solution& sol) {
    RestoredCounts rc;
    for (int wf : sol.w) rc.feeders += wf;
    for (int vb : sol.v) rc.buses += vb;
    if (sol.v.size() == net.buses.size() && sol.w.size() == net.feeders.size())
        rc.islands = check_forest(net, sol.v, sol.w).n_trees;
    return rc;
}

inline std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

// Right-align `cell` under a header of width `w`.
inline void put_cell(std::string& out, const std::string& cell, std::size_t w) {
    if (cell.size() < w) out.append(w - cell.size(), ' ');
    out += cell;
}

}  // namespace io_detail

inline json report_to_json(const RunReport& rep, const Network& net) {
    using namespace io_detail;
    json doc;
    doc["network"] = net.name;
    doc["mode"] = rep.config.mode == Mode::reconfiguration ? "reconfiguration" : "restoration";
    json cfg;
    cfg["lambda"] = rep.config.lambda;
    cfg["max_iters"] = rep.config.max_iters;
    cfg["eps_p"] = rep.config.eps_p;
    cfg["eps_q"] = rep.config.eps_q;
    cfg["mip_gap"] = rep.config.mip_gap;
    cfg["big_m"] =
        rep.config.big_m.tight ? json("tight") : json(rep.config.big_m.fixed);
    cfg["n_s"] = rep.config.n_s.derived ? json("derived") : json(rep.config.n_s.fixed_value);
    cfg["seed"] = rep.config.seed;
    doc["config"] = std::move(cfg);
    doc["termination"] = termination_name(rep.termination);
    doc["total_wall_time"] = rep.total_wall_time;

    doc["iterations"] = json::array();
    double accumulated = 0.0;
    for (const auto& it : rep.iterations) {
        accumulated += it.wall_time;
        json ji;
        ji["iteration"] = it.g;
        ji["wall_time"] = it.wall_time;
        ji["accumulated_time"] = accumulated;
        ji["objective"] = it.solution.objective;
        ji["status"] = solve_status_name(it.solution.status);
        ji["indices"] = indices_to_json(it.indices);
        json jb;
        jb["p_max"] = it.bounds_in.p_max;
        jb["q_max"] = it.bounds_in.q_max;
        ji["bounds"] = std::move(jb);
        json jm;
        jm["binaries"] = it.model_counts.binaries;
        jm["continuums"] = it.model_counts.continuums;
        jm["pf_rows"] = it.model_counts.pf_rows;
        jm["topology_rows"] = it.model_counts.topology_rows;
        ji["model"] = std::move(jm);
        if (!std::isnan(it.carryover_violation))
            ji["carryover_violation"] = it.carryover_violation;
        if (rep.config.mode == Mode::restoration &&
            it.solution.status != SolveStatus::infeasible) {
            const RestoredCounts rc = restored_counts(net, it.solution);
            ji["restored"] = {{"feeders", rc.feeders}, {"buses", rc.buses},
                              {"islands", rc.islands}};
        }
        doc["iterations"].push_back(std::move(ji));
    }

    doc["final"] = solution_to_json(rep.final, net);
    json jv;
    jv["ok"] = rep.validation.ok();
    jv["converged"] = rep.validation.converged;
    jv["exact_loss"] = rep.validation.exact_loss;
    jv["model_loss"] = rep.validation.model_loss;
    jv["loss_tolerance"] = rep.validation.loss_tolerance;
    jv["max_v_violation"] = rep.validation.max_v_violation;
    jv["max_i_violation"] = rep.validation.max_i_violation;
    json jf;
    jf["is_forest"] = rep.validation.forest.is_forest;
    jf["endpoints_ok"] = rep.validation.forest.endpoints_ok;
    jf["every_tree_rooted"] = rep.validation.forest.every_tree_rooted;
    jf["counting_ok"] = rep.validation.forest.counting_ok;
    jf["n_trees"] = rep.validation.forest.n_trees;
    jv["forest"] = std::move(jf);
    if (!rep.validation.note.empty()) jv["note"] = rep.validation.note;
    doc["validation"] = std::move(jv);
    return doc;
}

namespace io_detail {

// Header row plus data rows, right-aligned; column widths fit the widest
// cell so rows of different magnitude still line up.
inline void put_table(std::string& out, const std::vector<std::string>& head,
                      const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> w(head.size());
    for (std::size_t c = 0; c < head.size(); ++c) w[c] = head[c].size();
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c)
            if (row[c].size() > w[c]) w[c] = row[c].size();
    auto put_row = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) out += "  ";
            put_cell(out, row[c], w[c]);
        }
        out += "\n";
    };
    put_row(head);
    for (const auto& row : rows) put_row(row);
}

}  // namespace io_detail

/// Tabular summary: one row per iteration under the five standard columns,
/// plus a restoration section counting what each step brought back.
inline std::string report_table(const RunReport& rep, const Network& net) {
    using namespace io_detail;
    std::string out;
    out += "run: " + (net.name.empty() ? std::string("(unnamed)") : net.name);
    out += "  mode: ";
    out += rep.config.mode == Mode::reconfiguration ? "reconfiguration" : "restoration";
    out += "  termination: ";
    out += termination_name(rep.termination);
    out += "\n\n";

    std::vector<std::vector<std::string>> rows;
    double accumulated = 0.0;
    for (const auto& it : rep.iterations) {
        accumulated += it.wall_time;
        rows.push_back({std::to_string(it.g), fixed(accumulated, 4) + " s",
                        fixed(it.solution.objective, 6),
                        std::isnan(it.indices.e_p_mean) ? "-" : fixed(it.indices.e_p_mean, 6),
                        std::isnan(it.indices.e_q_mean) ? "-" : fixed(it.indices.e_q_mean, 6)});
    }
    put_table(out,
              {"Iteration number", "Accumulated modeling and solving time",
               "Objective function value", "E_p^m", "E_q^m"},
              rows);

    if (rep.config.mode == Mode::restoration) {
        out += "\n";
        rows.clear();
        for (const auto& it : rep.iterations) {
            if (it.solution.status == SolveStatus::infeasible) continue;
            const RestoredCounts rc = restored_counts(net, it.solution);
            rows.push_back({std::to_string(it.g), std::to_string(rc.feeders),
                            std::to_string(rc.buses), std::to_string(rc.islands)});
        }
        put_table(out,
                  {"Iteration number", "The number of restored feeders",
                   "The number of restored buses", "The number of self-healing islands"},
                  rows);
    }
    return out;
}

inline void write_report(const RunReport& rep, const Network& net, const std::string& path,
                         ReportFormat format) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write report: " + path);
    if (format == ReportFormat::json_doc)
        out << report_to_json(rep, net).dump(2) << "\n";
    else
        out << report_table(rep, net);
    if (!out) throw Error("write failed: " + path);
}

}  // namespace lpp
