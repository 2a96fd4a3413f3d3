#pragma once

// Command-line surface.  Four subcommands: reconfigure and restore run the
// iterative tightening loop in the two objective modes, validate checks a
// network file and reports its problems, sweep-lambda compares direct
// (single-step) solves across segment counts.  cli_main takes the streams so
// tests can drive it like a function; main() is a one-liner around it.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "external_backend.hpp"
#include "io.hpp"
#include "lp_format.hpp"
#include "model_builder.hpp"
#include "multistep.hpp"
#include "solver.hpp"

namespace lpp {

namespace cli_detail {

struct Options {
    std::string net_path;
    int lambda = 10;
    int max_iters = 5;
    double eps_p = 0.1;
    double eps_q = 0.1;
    double gap = 1e-4;
    std::string backend = "enumerate";
    std::string big_m = "tight";
    std::string solver_cmd;
    unsigned seed = 0;
    std::string out;
    std::string dump_model;
    std::vector<int> lambdas;
};

// "tight" or "fixed:<value>"; returns an error message for anything else so
// the parser can reject it at the flag.
inline std::string check_big_m(const std::string& s) {
    if (s == "tight") return {};
    if (s.rfind("fixed:", 0) == 0) {
        const std::string num = s.substr(6);
        std::size_t used = 0;
        try {
            const double v = std::stod(num, &used);
            if (used == num.size() && v > 0.0) return {};
        } catch (...) {
        }
    }
    return "expected tight or fixed:<positive value>, got \"" + s + "\"";
}

inline RunConfig config_from(const Options& o, Mode mode) {
    RunConfig cfg;
    cfg.mode = mode;
    cfg.lambda = o.lambda;
    cfg.max_iters = o.max_iters;
    cfg.eps_p = o.eps_p;
    cfg.eps_q = o.eps_q;
    cfg.mip_gap = o.gap;
    cfg.seed = o.seed;
    if (o.big_m == "tight")
        cfg.big_m = BigMPolicy::tight_policy();
    else
        cfg.big_m = BigMPolicy::fixed_policy(std::stod(o.big_m.substr(6)));
    return cfg;
}

inline std::unique_ptr<SolverBackend> make_backend(const Network& net, const RunConfig& cfg,
                                                   const Options& o) {
    if (o.backend == "external")
        return std::make_unique<ExternalBackend>(net, o.solver_cmd);
    return std::make_unique<EnumerativeBackend>(net, cfg);
}

inline void maybe_dump_model(const Network& net, const RunConfig& cfg, const Options& o) {
    if (o.dump_model.empty()) return;
    std::ofstream out(o.dump_model);
    if (!out) throw Error("cannot write model dump: " + o.dump_model);
    write_lp(out, build_model(net, cfg, init_bounds(net)));
}

inline int run_mode(Mode mode, const Options& o, std::ostream& out, std::ostream& err) {
    try {
        const Network net = load_network(o.net_path);
        const RunConfig cfg = config_from(o, mode);
        maybe_dump_model(net, cfg, o);
        auto backend = make_backend(net, cfg, o);
        const RunReport rep = run_multistep(net, cfg, *backend);
        out << report_table(rep, net);
        if (!o.out.empty()) write_report(rep, net, o.out, ReportFormat::json_doc);
        if (rep.termination == Termination::infeasible) {
            err << "error: no operable configuration exists for " << o.net_path << "\n";
            return 1;
        }
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int run_validate(const Options& o, std::ostream& out, std::ostream& err) {
    try {
        const Network net = load_network(o.net_path);
        out << o.net_path << ": valid, " << net.buses.size() << " buses, "
            << net.feeders.size() << " feeders\n";
        return 0;
    } catch (const Error& e) {
        err << e.what() << "\n";
        return 1;
    }
}

inline int run_sweep(const Options& o, std::ostream& out, std::ostream& err) {
    try {
        const Network net = load_network(o.net_path);
        json doc = json::array();
        out << "Set value of Lambda  Modeling and solving time  Objective function value"
               "     E_p^m     E_q^m\n";
        for (const int lam : o.lambdas) {
            if (lam < 1) throw Error("sweep-lambda: segment counts must be positive");
            Options one = o;
            one.lambda = lam;
            one.max_iters = 0;  // direct solution only, no renewal steps
            const RunConfig cfg = config_from(one, Mode::reconfiguration);
            auto backend = make_backend(net, cfg, one);
            const RunReport rep = run_multistep(net, cfg, *backend);
            const auto& rec = rep.iterations.front();
            char line[160];
            std::snprintf(line, sizeof line, "%19d  %23.4f s  %24.6f  %8.4f  %8.4f\n", lam,
                          rec.wall_time, rec.solution.objective, rec.indices.e_p_mean,
                          rec.indices.e_q_mean);
            out << line;
            json jr;
            jr["lambda"] = lam;
            jr["wall_time"] = rec.wall_time;
            jr["objective"] = rec.solution.objective;
            jr["status"] = solve_status_name(rec.solution.status);
            jr["e_p_mean"] = io_detail::finite_or_null(rec.indices.e_p_mean);
            jr["e_q_mean"] = io_detail::finite_or_null(rec.indices.e_q_mean);
            jr["termination"] = termination_name(rep.termination);
            doc.push_back(std::move(jr));
        }
        if (!o.out.empty()) {
            std::ofstream f(o.out);
            if (!f) throw Error("cannot write report: " + o.out);
            f << doc.dump(2) << "\n";
        }
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace cli_detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    using cli_detail::Options;
    CLI::App app{"load-pick-up optimization for radial distribution systems"};
    app.require_subcommand(1);
    Options o;

    auto add_network = [&o](CLI::App* sub) {
        sub->add_option("network", o.net_path, "network file (JSON, see data/network.schema.json)")
            ->required();
    };
    auto add_solve_flags = [&o](CLI::App* sub) {
        sub->add_option("--lambda", o.lambda, "segments per flow axis")
            ->check(CLI::PositiveNumber);
        sub->add_option("--gap", o.gap, "relative MIP gap for the backend");
        sub->add_option("--backend", o.backend, "solver backend")
            ->check(CLI::IsMember({"enumerate", "external"}));
        sub->add_option("--solver-cmd", o.solver_cmd,
                        "external solver command (default: LPP_EXTERNAL_SOLVER)");
        sub->add_option("--big-m", o.big_m, "relaxation constants: tight or fixed:<value>")
            ->check(CLI::Validator(cli_detail::check_big_m, "BIGM"));
        sub->add_option("--seed", o.seed, "seed echoed into reports");
        sub->add_option("--out", o.out, "write the full report as JSON here");
    };
    auto add_iter_flags = [&o](CLI::App* sub) {
        sub->add_option("--max-iters", o.max_iters, "renewal iterations after the direct solve")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--eps-p", o.eps_p, "active mean-error threshold, percent")
            ->check(CLI::PositiveNumber);
        sub->add_option("--eps-q", o.eps_q, "reactive mean-error threshold, percent")
            ->check(CLI::PositiveNumber);
        sub->add_option("--dump-model", o.dump_model,
                        "write the first-step model in LP exchange format here");
    };

    CLI::App* reconfigure =
        app.add_subcommand("reconfigure", "minimize losses with every bus served");
    add_network(reconfigure);
    add_solve_flags(reconfigure);
    add_iter_flags(reconfigure);

    CLI::App* restore =
        app.add_subcommand("restore", "maximize restored load, islands allowed");
    add_network(restore);
    add_solve_flags(restore);
    add_iter_flags(restore);

    CLI::App* validate = app.add_subcommand("validate", "check a network file and exit");
    add_network(validate);

    CLI::App* sweep = app.add_subcommand(
        "sweep-lambda", "direct solves over a list of segment counts (reconfiguration)");
    add_network(sweep);
    add_solve_flags(sweep);
    sweep->add_option("--lambdas", o.lambdas, "comma-separated segment counts")
        ->delimiter(',')
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    if (app.got_subcommand(reconfigure))
        return cli_detail::run_mode(Mode::reconfiguration, o, out, err);
    if (app.got_subcommand(restore)) return cli_detail::run_mode(Mode::restoration, o, out, err);
    if (app.got_subcommand(validate)) return cli_detail::run_validate(o, out, err);
    return cli_detail::run_sweep(o, out, err);
}

}  // namespace lpp
