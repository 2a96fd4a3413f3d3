#pragma once

// Solving layer over built models: the Solution value type, the linear
// subproblem left once every binary is fixed, and the exhaustive enumerative
// backend used as ground truth at desk scale.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "enumeration.hpp"
#include "lp_solver.hpp"
#include "model.hpp"
#include "network.hpp"

namespace lpp {

enum class SolveStatus { optimal, gap_optimal, infeasible, aborted };

inline const char* solve_status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::gap_optimal: return "gap-optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::aborted: return "aborted";
    }
    return "?";
}

struct Solution {
    SolveStatus status = SolveStatus::infeasible;
    double objective = 0.0;        // serving objective in model units
    std::vector<int> v;            // per bus service state
    std::vector<int> w;            // per feeder switch state
    std::vector<double> p_flow;    // per feeder, signed, at the receiving end
    std::vector<double> q_flow;
    std::vector<double> i_sqr;     // per feeder
    std::vector<double> v_sqr;     // per bus; NaN on de-energized buses, which reports omit
    std::vector<double> p_gen;     // per bus
    std::vector<double> q_gen;
    std::vector<double> p_load;    // served demand, all or nothing per bus
    std::vector<double> q_load;
    double achieved_gap = 0.0;
    double wall_time = 0.0;        // seconds
    std::vector<double> x;         // full variable vector behind the views above
};

/// Pin every binary to the given assignment and fold the switched row bounds
/// down to constants; the result is the continuous flow subproblem with the
/// loss cost as its objective.
inline LpProblem fix_binaries(const MilpModel& model, const BinaryAssignment& asg) {
    if (static_cast<int>(asg.v.size()) != model.n_buses() ||
        static_cast<int>(asg.w.size()) != model.n_feeders())
        throw Error("fix_binaries: assignment shape does not match the model");
    const std::size_t n = model.vars.size();
    LpProblem p;
    p.lo.resize(n);
    p.hi.resize(n);
    p.obj.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        p.lo[j] = model.vars[j].lo;
        p.hi[j] = model.vars[j].hi;
    }
    std::vector<double> binval(n, 0.0);
    auto pin = [&](int var, int val) {
        const auto j = static_cast<std::size_t>(var);
        if (val < model.vars[j].lo - 1e-9 || val > model.vars[j].hi + 1e-9)
            throw Error("fix_binaries: assignment conflicts with the pinned state of " +
                        model.vars[j].name);
        p.lo[j] = p.hi[j] = static_cast<double>(val);
        binval[j] = static_cast<double>(val);
    };
    for (int i = 0; i < model.n_buses(); ++i)
        pin(model.bus_vars[static_cast<std::size_t>(i)].state, asg.v[static_cast<std::size_t>(i)]);
    for (int f = 0; f < model.n_feeders(); ++f)
        pin(model.feeder_vars[static_cast<std::size_t>(f)].state, asg.w[static_cast<std::size_t>(f)]);
    for (const auto& [j, c] : model.loss_objective) p.obj[static_cast<std::size_t>(j)] += c;
    for (const auto& r : model.rows) {
        LpRow lr;
        lr.coeffs = r.coeffs;
        if (r.switch_var < 0) {
            lr.lo = r.lo;
            lr.hi = r.hi;
        } else {
            const double b = binval[static_cast<std::size_t>(r.switch_var)];
            lr.lo = r.lo + r.lo_scale * b;
            lr.hi = r.hi + r.hi_scale * b;
        }
        p.rows.push_back(std::move(lr));
    }
    return p;
}

/// Solve the flow LP for one fixed configuration. Infeasibility is a normal
/// outcome (the configuration is simply not operable); any other non-optimal
/// LP status would mean broken model data and throws.
inline Solution solve_continuous_subproblem(const MilpModel& model, const BinaryAssignment& asg) {
    const auto t0 = std::chrono::steady_clock::now();
    Solution sol;
    sol.v = asg.v;
    sol.w = asg.w;
    const LpProblem lp = fix_binaries(model, asg);
    const LpResult res = lp_solve(lp);
    sol.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (res.status == LpStatus::infeasible) return sol;
    if (res.status != LpStatus::optimal)
        throw Error("solve_continuous_subproblem: flow subproblem ended neither optimal nor "
                    "infeasible; the model bounds should preclude that");

    sol.status = SolveStatus::optimal;
    sol.x = res.x;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int i = 0; i < model.n_buses(); ++i) {
        const BusVars& bv = model.bus_vars[static_cast<std::size_t>(i)];
        sol.p_gen.push_back(res.x[static_cast<std::size_t>(bv.gen_p)]);
        sol.q_gen.push_back(res.x[static_cast<std::size_t>(bv.gen_q)]);
        sol.p_load.push_back(res.x[static_cast<std::size_t>(bv.load_p)]);
        sol.q_load.push_back(res.x[static_cast<std::size_t>(bv.load_q)]);
        sol.v_sqr.push_back(asg.v[static_cast<std::size_t>(i)] != 0
                                ? res.x[static_cast<std::size_t>(bv.v_sqr)]
                                : nan);
    }
    for (int f = 0; f < model.n_feeders(); ++f) {
        const FeederVars& fv = model.feeder_vars[static_cast<std::size_t>(f)];
        sol.p_flow.push_back(res.x[static_cast<std::size_t>(fv.p)]);
        sol.q_flow.push_back(res.x[static_cast<std::size_t>(fv.q)]);
        sol.i_sqr.push_back(res.x[static_cast<std::size_t>(fv.i_sqr)]);
    }
    if (model.mode == Mode::reconfiguration) {
        sol.objective = res.objective;  // the loss cost is the serving objective here
    } else {
        sol.objective = 0.0;
        for (const double pl : sol.p_load) sol.objective += pl;
    }
    return sol;
}

// Uniform backend contract. gap is the requested relative optimality gap;
// warm, when present, offers the caller's incumbent binaries as a start.
struct SolverBackend {
    virtual ~SolverBackend() = default;
    virtual Solution solve(const MilpModel& model, double gap, const Solution* warm) = 0;
};

/// Ground-truth backend: every radial configuration is enumerated and its
/// flow LP solved; the best serving objective wins, ties broken by the
/// lexicographically smallest sorted energized feeder id list, then bus ids.
class EnumerativeBackend final : public SolverBackend {
  public:
    EnumerativeBackend(Network net, RunConfig cfg) : net_(std::move(net)), cfg_(std::move(cfg)) {}

    Solution solve(const MilpModel& model, double gap, const Solution* warm) override {
        (void)gap;   // exhaustive search is exact, the achieved gap is zero
        (void)warm;  // an incumbent cannot prune an exhaustive scan
        const auto t0 = std::chrono::steady_clock::now();
        count_model(model);
        if (model.n_buses() != static_cast<int>(net_.buses.size()) ||
            model.n_feeders() != static_cast<int>(net_.feeders.size()))
            throw Error("EnumerativeBackend: model shape does not match the network");

        const auto configs = enumerate_radial_configurations(net_, cfg_);
        std::optional<Solution> best;
        TieKey best_key;

        if (model.mode == Mode::restoration) {
            // served load is decided by the bus states alone, so visit the
            // configurations best first and keep the first operable one
            std::vector<double> served(configs.size(), 0.0);
            std::vector<TieKey> keys(configs.size());
            for (std::size_t c = 0; c < configs.size(); ++c) {
                for (std::size_t i = 0; i < net_.buses.size(); ++i)
                    if (configs[c].v[i] != 0) served[c] += net_.buses[i].load_p;
                keys[c] = tie_key(configs[c]);
            }
            std::vector<std::size_t> order(configs.size());
            for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (served[a] != served[b]) return served[a] > served[b];
                return keys[a] < keys[b];
            });
            for (const std::size_t c : order) {
                Solution sub = solve_continuous_subproblem(model, configs[c]);
                if (sub.status != SolveStatus::optimal) continue;
                best = std::move(sub);
                break;
            }
        } else {
            for (const auto& config : configs) {
                Solution sub = solve_continuous_subproblem(model, config);
                if (sub.status != SolveStatus::optimal) continue;
                TieKey key = tie_key(config);
                const double eps = best ? 1e-12 * (1.0 + std::abs(best->objective)) : 0.0;
                const bool take = !best || sub.objective < best->objective - eps ||
                                  (std::abs(sub.objective - best->objective) <= eps && key < best_key);
                if (take) {
                    best = std::move(sub);
                    best_key = std::move(key);
                }
            }
        }

        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!best) {
            Solution none;
            none.wall_time = elapsed;
            return none;
        }
        best->wall_time = elapsed;
        best->achieved_gap = 0.0;
        return *best;
    }

  private:
    using TieKey = ConfigKey;

    TieKey tie_key(const BinaryAssignment& a) const { return config_tie_key(net_, a); }

    Network net_;
    RunConfig cfg_;
};

}  // namespace lpp
