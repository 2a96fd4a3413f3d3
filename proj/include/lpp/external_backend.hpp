#pragma once

// Adapter for an out-of-process MILP solver.  The model travels as a JSON
// document (switched row bounds folded into plain two-sided rows, null for
// an unbounded side), the solver command is run as
// `<command> model.json solution.json`, and the answer comes back as JSON.
// tools/milp_runner.py implements the solver side on scipy.  Returned
// points are not trusted: binaries must be integral, every row must hold
// within the backend feasibility tolerance, and the switched-on subgraph
// must be a rooted forest, otherwise the solve fails loudly.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "distflow.hpp"
#include "model.hpp"
#include "solver.hpp"

namespace lpp {

namespace ext_detail {

inline nlohmann::ordered_json bound_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

// One plain row per finite side, binary moved into the coefficients.  Rows
// whose sides share the switch scale stay two-sided.
inline void fold_rows(const MilpModel& m, nlohmann::ordered_json& rows) {
    auto coeffs_with = [](const Row& r, double scale) {
        nlohmann::ordered_json terms = nlohmann::ordered_json::array();
        for (const auto& [j, c] : r.coeffs) terms.push_back({j, c});
        if (r.switch_var >= 0 && scale != 0.0) terms.push_back({r.switch_var, -scale});
        return terms;
    };
    for (const auto& r : m.rows) {
        const bool has_lo = std::isfinite(r.lo);
        const bool has_hi = std::isfinite(r.hi);
        if (!has_lo && !has_hi) continue;
        const bool one_piece =
            !has_lo || !has_hi || r.switch_var < 0 || r.lo_scale == r.hi_scale;
        if (one_piece) {
            nlohmann::ordered_json row;
            row["name"] = r.name;
            row["coeffs"] = coeffs_with(r, has_lo ? r.lo_scale : r.hi_scale);
            row["lo"] = has_lo ? nlohmann::ordered_json(r.lo) : nlohmann::ordered_json(nullptr);
            row["hi"] = has_hi ? nlohmann::ordered_json(r.hi) : nlohmann::ordered_json(nullptr);
            rows.push_back(std::move(row));
        } else {
            nlohmann::ordered_json lo_row;
            lo_row["name"] = r.name + "_lo";
            lo_row["coeffs"] = coeffs_with(r, r.lo_scale);
            lo_row["lo"] = r.lo;
            lo_row["hi"] = nullptr;
            rows.push_back(std::move(lo_row));
            nlohmann::ordered_json hi_row;
            hi_row["name"] = r.name + "_hi";
            hi_row["coeffs"] = coeffs_with(r, r.hi_scale);
            hi_row["lo"] = nullptr;
            hi_row["hi"] = r.hi;
            rows.push_back(std::move(hi_row));
        }
    }
}

}  // namespace ext_detail

/// The document handed to the solver command.
inline std::string model_exchange_json(const MilpModel& m, double gap,
                                       const Solution* warm = nullptr) {
    using nlohmann::ordered_json;
    ordered_json doc;
    doc["sense"] = m.sense == ObjSense::minimize ? "minimize" : "maximize";
    doc["gap"] = gap;
    doc["objective"] = ordered_json::array();
    for (const auto& [j, c] : m.objective) doc["objective"].push_back({j, c});
    doc["vars"] = ordered_json::array();
    for (const auto& v : m.vars) {
        ordered_json jv;
        jv["name"] = v.name;
        jv["lo"] = ext_detail::bound_or_null(v.lo);
        jv["hi"] = ext_detail::bound_or_null(v.hi);
        jv["binary"] = v.is_binary;
        doc["vars"].push_back(std::move(jv));
    }
    doc["rows"] = ordered_json::array();
    ext_detail::fold_rows(m, doc["rows"]);
    if (warm != nullptr && !warm->x.empty()) {
        // starting incumbent, binaries only; solvers without warm-start
        // support simply ignore this block
        ordered_json wb = ordered_json::array();
        for (std::size_t j = 0; j < m.vars.size(); ++j)
            if (m.vars[j].is_binary && j < warm->x.size())
                wb.push_back({j, warm->x[j] > 0.5 ? 1 : 0});
        doc["warm_binaries"] = std::move(wb);
    }
    return doc.dump();
}

/// Runs the configured solver command on a model dump and rebuilds a checked
/// Solution from the returned point.
class ExternalBackend final : public SolverBackend {
  public:
    /// Empty command falls back to the LPP_EXTERNAL_SOLVER environment
    /// variable; having neither is the backend-unavailable error on solve.
    explicit ExternalBackend(Network net, std::string command = "")
        : net_(std::move(net)), command_(std::move(command)) {
        if (command_.empty()) {
            const char* env = std::getenv("LPP_EXTERNAL_SOLVER");
            if (env != nullptr) command_ = env;
        }
    }

    Solution solve(const MilpModel& model, double gap, const Solution* warm) override {
        if (command_.empty())
            throw Error("external solver backend unavailable: no command configured and "
                        "LPP_EXTERNAL_SOLVER is not set");
        const auto t0 = std::chrono::steady_clock::now();
        count_model(model);
        if (model.n_buses() != static_cast<int>(net_.buses.size()) ||
            model.n_feeders() != static_cast<int>(net_.feeders.size()))
            throw Error("ExternalBackend: model shape does not match the network");

        namespace fs = std::filesystem;
        const std::string stem =
            "lpp_milp_" + std::to_string(static_cast<long>(::getpid())) + "_" +
            std::to_string(++run_counter_);
        const fs::path dir = fs::temp_directory_path();
        const fs::path model_path = dir / (stem + "_model.json");
        const fs::path out_path = dir / (stem + "_solution.json");
        const fs::path log_path = dir / (stem + "_log.txt");
        {
            std::ofstream out(model_path);
            if (!out) throw Error("ExternalBackend: cannot write " + model_path.string());
            out << model_exchange_json(model, gap, warm);
        }
        const std::string cmdline = command_ + " " + model_path.string() + " " +
                                    out_path.string() + " > " + log_path.string() + " 2>&1";
        const int rc = std::system(cmdline.c_str());
        auto cleanup = [&] {
            std::error_code ec;
            fs::remove(model_path, ec);
            fs::remove(out_path, ec);
            fs::remove(log_path, ec);
        };
        if (rc != 0) {
            std::string log = read_file(log_path.string());
            if (log.size() > 800) log = "..." + log.substr(log.size() - 800);
            cleanup();
            throw Error("external solver command failed (exit " + std::to_string(rc) +
                        "): " + command_ + (log.empty() ? "" : "\n" + log));
        }
        nlohmann::json answer;
        try {
            answer = nlohmann::json::parse(read_file(out_path.string()));
        } catch (const nlohmann::json::parse_error& e) {
            cleanup();
            throw Error(std::string("external solver returned unreadable output: ") + e.what());
        }
        cleanup();
        Solution sol = interpret(model, answer);
        sol.wall_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return sol;
    }

  private:
    static std::string read_file(const std::string& path) {
        std::ifstream in(path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    }

    Solution interpret(const MilpModel& model, const nlohmann::json& answer) const {
        const std::string status = answer.value("status", std::string("aborted"));
        Solution sol;
        if (status == "infeasible") return sol;

        std::vector<double> x;
        if (answer.contains("x")) x = answer["x"].get<std::vector<double>>();
        if (status == "aborted") {
            sol.status = SolveStatus::aborted;
            if (x.size() == model.vars.size()) sol.x = std::move(x);
            return sol;
        }
        if (status != "optimal" && status != "gap-optimal")
            throw Error("external solver reported unknown status \"" + status + "\"");
        if (x.size() != model.vars.size())
            throw Error("external solver returned " + std::to_string(x.size()) +
                        " values for " + std::to_string(model.vars.size()) + " variables");

        // binaries must be integral before anything else is read off the point
        for (std::size_t j = 0; j < model.vars.size(); ++j) {
            if (!model.vars[j].is_binary) continue;
            const double rounded = x[j] > 0.5 ? 1.0 : 0.0;
            if (std::abs(x[j] - rounded) > 1e-6)
                throw Error("external solver left binary " + model.vars[j].name +
                            " fractional at " + std::to_string(x[j]));
            x[j] = rounded;
        }
        double worst = 0.0;
        std::string worst_name;
        for (const auto& r : model.rows) {
            const double v = row_violation(r, x);
            if (v > worst) {
                worst = v;
                worst_name = r.name;
            }
        }
        for (std::size_t j = 0; j < model.vars.size(); ++j) {
            const double v = std::max(model.vars[j].lo - x[j], x[j] - model.vars[j].hi);
            if (v > worst) {
                worst = v;
                worst_name = model.vars[j].name;
            }
        }
        if (worst > 1e-6)
            throw Error("external solver point violates " + worst_name + " by " +
                        std::to_string(worst));

        BinaryAssignment asg;
        for (int i = 0; i < model.n_buses(); ++i)
            asg.v.push_back(static_cast<int>(
                x[static_cast<std::size_t>(model.bus_vars[static_cast<std::size_t>(i)].state)]));
        for (int f = 0; f < model.n_feeders(); ++f)
            asg.w.push_back(static_cast<int>(
                x[static_cast<std::size_t>(
                    model.feeder_vars[static_cast<std::size_t>(f)].state)]));
        const ForestReport forest = check_forest(net_, asg.v, asg.w);
        if (!forest.ok()) {
            std::string why;
            for (const auto& n : forest.notes) why += "\n  " + n;
            throw Error("external solver returned a non-forest topology" + why);
        }

        sol.status = status == "optimal" ? SolveStatus::optimal : SolveStatus::gap_optimal;
        sol.achieved_gap = answer.value("mip_gap", 0.0);
        sol.v = std::move(asg.v);
        sol.w = std::move(asg.w);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (int i = 0; i < model.n_buses(); ++i) {
            const BusVars& bv = model.bus_vars[static_cast<std::size_t>(i)];
            sol.p_gen.push_back(x[static_cast<std::size_t>(bv.gen_p)]);
            sol.q_gen.push_back(x[static_cast<std::size_t>(bv.gen_q)]);
            sol.p_load.push_back(x[static_cast<std::size_t>(bv.load_p)]);
            sol.q_load.push_back(x[static_cast<std::size_t>(bv.load_q)]);
            sol.v_sqr.push_back(sol.v[static_cast<std::size_t>(i)] != 0
                                    ? x[static_cast<std::size_t>(bv.v_sqr)]
                                    : nan);
        }
        for (int f = 0; f < model.n_feeders(); ++f) {
            const FeederVars& fv = model.feeder_vars[static_cast<std::size_t>(f)];
            sol.p_flow.push_back(x[static_cast<std::size_t>(fv.p)]);
            sol.q_flow.push_back(x[static_cast<std::size_t>(fv.q)]);
            sol.i_sqr.push_back(x[static_cast<std::size_t>(fv.i_sqr)]);
        }
        // the objective is recomputed here so a sign slip in a runner shows
        // up as a mismatch in tests instead of being taken at face value
        sol.objective = 0.0;
        for (const auto& [j, c] : model.objective)
            sol.objective += c * x[static_cast<std::size_t>(j)];
        sol.x = std::move(x);
        return sol;
    }

    Network net_;
    std::string command_;
    int run_counter_ = 0;
};

}  // namespace lpp
