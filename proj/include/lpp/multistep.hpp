#pragma once

// The iterative tightening loop: solve under the current fill-grid bounds,
// grade the approximation, pull each in-service feeder's bound onto the value
// its flow actually reached, and solve again until the mean error indices
// fall under their thresholds or the iteration budget runs out. Bounds only
// ever shrink, so each step's model is at least as accurate as the last and
// the previous flows remain inside the new boxes.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "distflow.hpp"
#include "enumeration.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "model_builder.hpp"
#include "network.hpp"
#include "pwl.hpp"
#include "solver.hpp"

namespace lpp {

struct IterationRecord {
    int g = 0;
    FeederBounds bounds_in;
    Solution solution;
    ErrorIndices indices;  // holds the means and per-feeder errors
    CountRecord model_counts;
    double wall_time = 0.0;
    // worst violation of the step's approximation and topology rows by the
    // previous step's solution, canonically re-decomposed; NaN at step 0
    double carryover_violation = std::numeric_limits<double>::quiet_NaN();
};

enum class Termination { threshold_met, iteration_cap, infeasible };

inline const char* termination_name(Termination t) {
    switch (t) {
        case Termination::threshold_met: return "threshold-met";
        case Termination::iteration_cap: return "iteration-cap";
        case Termination::infeasible: return "infeasible";
    }
    return "?";
}

struct RunReport {
    RunConfig config;
    std::vector<IterationRecord> iterations;
    Solution final;
    Termination termination = Termination::infeasible;
    OracleValidation validation;  // populated when the final solution exists
    double total_wall_time = 0.0;
};

/// A later step shrinking a bound below the flow the earlier step chose would
/// break the guarantee that old solutions stay available; this carries both
/// bound sets out for diagnosis.
struct RobustnessViolation : Error {
    FeederBounds previous_bounds, renewed_bounds;

    RobustnessViolation(const std::string& msg, FeederBounds prev, FeederBounds next)
        : Error(msg), previous_bounds(std::move(prev)), renewed_bounds(std::move(next)) {}
};

// ---- bound schedule

/// Widest physically meaningful flow box: voltage ceiling times ampacity.
inline FeederBounds init_bounds(const Network& net) {
    FeederBounds b;
    b.p_max.reserve(net.feeders.size());
    b.q_max.reserve(net.feeders.size());
    for (const Feeder& f : net.feeders) {
        b.p_max.push_back(net.v_max * f.i_max);
        b.q_max.push_back(net.v_max * f.i_max);
    }
    return b;
}

/// Pulls every in-service feeder's bound onto the square root of the grid
/// value its flow reached, which is never below the flow itself and never
/// above the old bound. Open feeders keep their bounds; a tiny floor keeps a
/// zero-flow bound usable as a grid width next step.
inline FeederBounds renew_bounds(const FeederBounds& prev, const Solution& sol, int lambda) {
    if (sol.w.size() != prev.p_max.size())
        throw Error("renew_bounds: solution shape does not match the bounds");
    FeederBounds next = prev;
    const double floor = 1e-6;
    for (std::size_t f = 0; f < sol.w.size(); ++f) {
        if (sol.w[f] == 0) continue;
        auto renew = [&](double flow, double bound, const char* axis) {
            if (std::abs(flow) > bound * (1.0 + pwl_clamp_slack))
                throw Error("renew_bounds: " + std::string(axis) + " flow " +
                            std::to_string(flow) + " on feeder " + std::to_string(f) +
                            " escaped its bound " + std::to_string(bound) +
                            "; the previous solve was inconsistent");
            const double pulled = std::sqrt(pwl_eval(flow, {bound, lambda}));
            return std::min(bound, std::max(floor, pulled));
        };
        next.p_max[f] = renew(sol.p_flow[f], prev.p_max[f], "active");
        next.q_max[f] = renew(sol.q_flow[f], prev.q_max[f], "reactive");
    }
    return next;
}

// ---- carryover witness

/// Re-decomposes the previous solution under this step's bounds (splits,
/// fills, and the coupled squared current, everything else untouched) and
/// reports the worst violation among the rows that define the approximation
/// and the topology, plus every variable box. Nodal balances and voltage
/// rows are excluded: re-deriving the current shifts their residuals by the
/// accuracy gained, and their continued feasibility is exactly what the
/// step's own solve establishes.
inline double carryover_violation(const MilpModel& next, const Solution& prev,
                                  const FeederBounds& new_bounds, int lambda) {
    if (prev.x.size() != next.vars.size())
        throw Error("carryover_violation: variable layout changed between steps");
    std::vector<double> x = prev.x;
    for (std::size_t f = 0; f < next.feeder_vars.size(); ++f) {
        const FeederVars& fv = next.feeder_vars[f];
        const PwlDecomposition dp =
            pwl_decompose(x[static_cast<std::size_t>(fv.p)], {new_bounds.p_max[f], lambda});
        const PwlDecomposition dq =
            pwl_decompose(x[static_cast<std::size_t>(fv.q)], {new_bounds.q_max[f], lambda});
        x[static_cast<std::size_t>(fv.p_plus)] = dp.y_plus;
        x[static_cast<std::size_t>(fv.p_minus)] = dp.y_minus;
        x[static_cast<std::size_t>(fv.q_plus)] = dq.y_plus;
        x[static_cast<std::size_t>(fv.q_minus)] = dq.y_minus;
        for (int k = 0; k < lambda; ++k) {
            x[static_cast<std::size_t>(fv.fill_p + k)] = dp.deltas[static_cast<std::size_t>(k)];
            x[static_cast<std::size_t>(fv.fill_q + k)] = dq.deltas[static_cast<std::size_t>(k)];
        }
        x[static_cast<std::size_t>(fv.i_sqr)] = (dp.value + dq.value) / next.v_norm_sqr;
    }

    double worst = 0.0;
    for (const Row& r : next.rows) {
        switch (r.tag) {
            case RowTag::pwl_coupling:
            case RowTag::current_cap:
            case RowTag::flow_p_cap:
            case RowTag::flow_q_cap:
            case RowTag::radiality_count:
            case RowTag::endpoint_coupling: break;
            default: continue;
        }
        worst = std::max(worst, row_violation(r, x));
    }
    for (std::size_t j = 0; j < next.vars.size(); ++j) {
        worst = std::max(worst, next.vars[j].lo - x[j]);
        worst = std::max(worst, x[j] - next.vars[j].hi);
    }
    return worst;
}

// ---- the loop

inline RunReport run_multistep(const Network& net, const RunConfig& cfg, SolverBackend& backend) {
    const ValidationReport issues = validate_network(net);
    if (!issues.ok())
        throw Error("run_multistep: network fails validation: " +
                    issues.violations.front().message);

    RunReport rep;
    rep.config = cfg;
    FeederBounds bounds = init_bounds(net);

    for (int g = 0;; ++g) {
        const auto t0 = std::chrono::steady_clock::now();
        MilpModel model = build_model(net, cfg, bounds);
        IterationRecord rec;
        rec.g = g;
        rec.bounds_in = bounds;
        rec.model_counts = count_model(model);
        if (g >= 1)
            rec.carryover_violation =
                carryover_violation(model, rep.iterations.back().solution, bounds, cfg.lambda);

        const Solution* warm = g >= 1 ? &rep.iterations.back().solution : nullptr;
        Solution sol = backend.solve(model, cfg.mip_gap, warm);
        if (sol.status != SolveStatus::optimal && sol.status != SolveStatus::gap_optimal) {
            if (g >= 1)
                throw RobustnessViolation(
                    "run_multistep: step " + std::to_string(g) +
                        " lost a solution the tightened bounds were proven to keep",
                    rep.iterations.back().bounds_in, bounds);
            rec.solution = std::move(sol);
            rec.wall_time =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            rep.total_wall_time += rec.wall_time;
            rep.final = rec.solution;
            rep.iterations.push_back(std::move(rec));
            rep.termination = Termination::infeasible;
            return rep;
        }

        rec.indices = error_indices(net, sol, bounds, cfg.lambda, 1e-8, &model);
        rec.solution = std::move(sol);
        rec.wall_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep.total_wall_time += rec.wall_time;
        rep.iterations.push_back(std::move(rec));

        const IterationRecord& last = rep.iterations.back();
        if (last.indices.e_p_mean <= cfg.eps_p && last.indices.e_q_mean <= cfg.eps_q) {
            rep.termination = Termination::threshold_met;
            break;
        }
        if (g == cfg.max_iters) {
            rep.termination = Termination::iteration_cap;
            break;
        }
        bounds = renew_bounds(bounds, last.solution, cfg.lambda);
    }

    rep.final = rep.iterations.back().solution;
    const BinaryAssignment asg{rep.final.v, rep.final.w};
    double model_loss = 0.0;
    for (std::size_t f = 0; f < net.feeders.size(); ++f)
        model_loss += net.feeders[f].r * rep.final.i_sqr[f];
    rep.validation = validate_solution(
        net, asg,
        injections_from_dispatch(net, asg, rep.final.p_gen, rep.final.q_gen, rep.final.p_load,
                                 rep.final.q_load),
        model_loss, rep.iterations.back().bounds_in, cfg.lambda, cfg.mode);
    return rep;
}

}  // namespace lpp
