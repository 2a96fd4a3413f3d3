#pragma once

// Self-contained dense LP solver: bounded-variable primal simplex with a
// composite phase 1, an explicit basis inverse with periodic refactoring,
// and a light presolve (singleton rows into bounds, redundant rows dropped,
// fixed columns substituted). Scope is the subproblems this toolkit
// produces: a few hundred rows, well scaled, always bounded.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "network.hpp"  // Error

namespace lpp {

struct LpRow {
    std::vector<std::pair<int, double>> coeffs;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

/// minimize obj . x  subject to  row.lo <= a.x <= row.hi  and  lo <= x <= hi
struct LpProblem {
    std::vector<double> lo, hi, obj;
    std::vector<LpRow> rows;

    std::size_t n_vars() const { return lo.size(); }
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
    LpStatus status = LpStatus::iteration_limit;
    double objective = 0.0;
    std::vector<double> x;  // filled only on optimal
    // Filled only when the solve ran without presolve: row multipliers and
    // per-column reduced costs (structural columns first, then row slacks),
    // enough to check an optimality certificate externally.
    std::vector<double> row_dual;
    std::vector<double> reduced_cost;
    int iterations = 0;
};

struct LpOptions {
    double feas_tol = 1e-8;
    double piv_tol = 1e-9;
    double opt_tol = 1e-9;
    int max_iters = 0;  // 0: scale with problem size
    bool presolve = true;
};

namespace lp_detail {

constexpr double inf = std::numeric_limits<double>::infinity();

// columns of [A | -I] with bounds; minimize cost over all columns
struct Core {
    int m = 0, n = 0;  // rows, structural columns
    std::vector<std::vector<std::pair<int, double>>> cols;
    std::vector<double> lo, hi, cost;

    int total() const { return n + m; }
};

enum : int { at_lo = 0, at_hi = 1, at_free = 2, in_basis = 3 };
enum : int { pass_optimal = 0, pass_cap = 1, pass_unbounded = 2 };

struct Simplex {
    const Core& core;
    const LpOptions& opt;
    std::vector<int> basic;    // column occupying each basis slot
    std::vector<int> where;    // per column: at_lo / at_hi / at_free / in_basis
    std::vector<double> xn;    // value of each nonbasic column
    std::vector<double> xb;    // value of each basic column, by slot
    std::vector<double> binv;  // dense basis inverse, row-major m*m
    std::vector<int> slot_of;  // column -> basis slot, -1 if nonbasic
    int iterations = 0;
    bool bland = false;
    int stall = 0;

    Simplex(const Core& c, const LpOptions& o) : core(c), opt(o) {}

    double colval(int j) const { return where[j] == in_basis ? xb[slot_of[j]] : xn[j]; }

    void start_basis() {
        const int m = core.m;
        basic.resize(m);
        xb.assign(m, 0.0);
        slot_of.assign(core.total(), -1);
        where.assign(core.total(), at_lo);
        xn.assign(core.total(), 0.0);
        for (int j = 0; j < core.total(); ++j) {
            if (std::isfinite(core.lo[j])) {
                where[j] = at_lo;
                xn[j] = core.lo[j];
            } else if (std::isfinite(core.hi[j])) {
                where[j] = at_hi;
                xn[j] = core.hi[j];
            } else {
                where[j] = at_free;
                xn[j] = 0.0;
            }
        }
        for (int i = 0; i < m; ++i) {
            const int j = core.n + i;
            basic[i] = j;
            where[j] = in_basis;
            slot_of[j] = i;
        }
        binv.assign(static_cast<std::size_t>(m) * m, 0.0);
        for (int i = 0; i < m; ++i) binv[static_cast<std::size_t>(i) * m + i] = -1.0;
        recompute_xb();
    }

    void recompute_xb() {
        const int m = core.m;
        std::vector<double> rhs(m, 0.0);
        for (int j = 0; j < core.total(); ++j) {
            if (where[j] == in_basis) continue;
            const double v = xn[j];
            if (v == 0.0) continue;
            for (const auto& [r, a] : core.cols[j]) rhs[r] += a * v;
        }
        for (int i = 0; i < m; ++i) {
            double s = 0.0;
            for (int k = 0; k < m; ++k) s += binv[static_cast<std::size_t>(i) * m + k] * rhs[k];
            xb[i] = -s;
        }
    }

    void refactor() {
        const int m = core.m;
        if (m == 0) return;
        // Gauss-Jordan inverse of the current basis matrix
        std::vector<double> a(static_cast<std::size_t>(m) * 2 * m, 0.0);
        auto at = [&a, m](int i, int j) -> double& {
            return a[static_cast<std::size_t>(i) * 2 * m + j];
        };
        for (int s = 0; s < m; ++s)
            for (const auto& [r, v] : core.cols[basic[s]]) at(r, s) = v;
        for (int i = 0; i < m; ++i) at(i, m + i) = 1.0;
        for (int c = 0; c < m; ++c) {
            int piv = c;
            for (int r = c + 1; r < m; ++r)
                if (std::abs(at(r, c)) > std::abs(at(piv, c))) piv = r;
            if (std::abs(at(piv, c)) < 1e-12) throw Error("lp_solve: singular basis on refactor");
            if (piv != c)
                for (int j = 0; j < 2 * m; ++j) std::swap(at(piv, j), at(c, j));
            const double d = at(c, c);
            for (int j = 0; j < 2 * m; ++j) at(c, j) /= d;
            for (int r = 0; r < m; ++r) {
                if (r == c) continue;
                const double f = at(r, c);
                if (f == 0.0) continue;
                for (int j = 0; j < 2 * m; ++j) at(r, j) -= f * at(c, j);
            }
        }
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) binv[static_cast<std::size_t>(i) * m + j] = at(i, m + j);
        recompute_xb();
    }

    std::vector<double> duals(const std::vector<double>& cost) const {
        const int m = core.m;
        std::vector<double> y(m, 0.0);
        for (int k = 0; k < m; ++k) {
            const double cb = cost[basic[k]];
            if (cb == 0.0) continue;
            for (int i = 0; i < m; ++i) y[i] += cb * binv[static_cast<std::size_t>(k) * m + i];
        }
        return y;
    }

    double reduced(const std::vector<double>& cost, const std::vector<double>& y, int j) const {
        double d = cost[j];
        for (const auto& [r, v] : core.cols[j]) d -= y[r] * v;
        return d;
    }

    // One simplex pass over a fixed cost vector; stops at iter_cap.
    int iterate(const std::vector<double>& cost, bool phase_one, int iter_cap) {
        const int m = core.m;
        while (iterations < iter_cap) {
            std::vector<double> y = duals(cost);
            int q = -1, q_dir = 0;
            double best = -opt.opt_tol;
            for (int j = 0; j < core.total(); ++j) {
                if (where[j] == in_basis) continue;
                const double d = reduced(cost, y, j);
                double score = 0.0;
                int dir = 0;
                if (where[j] == at_lo && d < 0.0) {
                    score = d;
                    dir = +1;
                } else if (where[j] == at_hi && d > 0.0) {
                    score = -d;
                    dir = -1;
                } else if (where[j] == at_free && d != 0.0) {
                    score = -std::abs(d);
                    dir = d < 0.0 ? +1 : -1;
                }
                if (score < best) {
                    best = score;
                    q = j;
                    q_dir = dir;
                    if (bland) break;  // first improving index wins
                }
            }
            if (q < 0) return pass_optimal;

            // basic-value change per unit of entering movement is -sigma*w
            std::vector<double> w(m, 0.0);
            for (const auto& [r, v] : core.cols[q])
                for (int i = 0; i < m; ++i) w[i] += binv[static_cast<std::size_t>(i) * m + r] * v;
            const double sigma = q_dir;

            double theta = inf;
            int leave_slot = -1;
            int leave_to = at_lo;
            if (std::isfinite(core.hi[q]) && std::isfinite(core.lo[q]))
                theta = core.hi[q] - core.lo[q];  // entering's own span: bound flip
            for (int i = 0; i < m; ++i) {
                const double delta = -sigma * w[i];
                if (std::abs(delta) < opt.piv_tol) continue;
                const int bj = basic[i];
                const double v = xb[i];
                double room = inf;
                int to = at_lo;
                if (phase_one && v < core.lo[bj] - opt.feas_tol) {
                    // infeasible below its range: the next bound in an upward
                    // move is lo; a downward move is unblocked here
                    if (delta > 0.0) {
                        room = (core.lo[bj] - v) / delta;
                        to = at_lo;
                    }
                } else if (phase_one && v > core.hi[bj] + opt.feas_tol) {
                    if (delta < 0.0) {
                        room = (core.hi[bj] - v) / delta;
                        to = at_hi;
                    }
                } else if (delta > 0.0) {
                    if (std::isfinite(core.hi[bj])) {
                        room = (core.hi[bj] - v) / delta;
                        to = at_hi;
                    }
                } else {
                    if (std::isfinite(core.lo[bj])) {
                        room = (core.lo[bj] - v) / delta;
                        to = at_lo;
                    }
                }
                if (room == inf) continue;
                if (room < 0.0) room = 0.0;
                const bool strictly = room < theta - 1e-12;
                const bool tie = room <= theta + 1e-12;
                // deterministic tie break: prefer a pivot over a bound flip,
                // then the smallest leaving column index
                if (strictly || (tie && (leave_slot < 0 || basic[i] < basic[leave_slot]))) {
                    theta = std::min(theta, room);
                    leave_slot = i;
                    leave_to = to;
                }
            }
            if (!std::isfinite(theta)) {
                if (phase_one) throw Error("lp_solve: unbounded infeasibility ray");
                return pass_unbounded;
            }

            ++iterations;
            if (theta > 1e-10) {
                stall = 0;
                bland = false;
            } else if (++stall > 50) {
                bland = true;
            }

            const double step = sigma * theta;
            if (leave_slot < 0) {
                for (int i = 0; i < m; ++i) xb[i] -= step * w[i];
                xn[q] = where[q] == at_lo ? core.hi[q] : core.lo[q];
                where[q] = where[q] == at_lo ? at_hi : at_lo;
            } else {
                const double enter_val = xn[q] + step;
                for (int i = 0; i < m; ++i) xb[i] -= step * w[i];
                const int out = basic[leave_slot];
                where[out] = leave_to;
                xn[out] = leave_to == at_lo ? core.lo[out] : core.hi[out];
                slot_of[out] = -1;
                basic[leave_slot] = q;
                where[q] = in_basis;
                slot_of[q] = leave_slot;
                xb[leave_slot] = enter_val;
                const double wr = w[leave_slot];
                for (int i = 0; i < m; ++i) {
                    if (i == leave_slot) continue;
                    const double f = w[i] / wr;
                    if (f == 0.0) continue;
                    for (int k = 0; k < m; ++k)
                        binv[static_cast<std::size_t>(i) * m + k] -=
                            f * binv[static_cast<std::size_t>(leave_slot) * m + k];
                }
                for (int k = 0; k < m; ++k) binv[static_cast<std::size_t>(leave_slot) * m + k] /= wr;
            }
            if (iterations % 64 == 0) refactor();
        }
        return pass_cap;
    }

    double infeasibility() const {
        double s = 0.0;
        for (int i = 0; i < core.m; ++i) {
            const int j = basic[i];
            if (xb[i] < core.lo[j]) s += core.lo[j] - xb[i];
            if (xb[i] > core.hi[j]) s += xb[i] - core.hi[j];
        }
        return s;
    }
};

// Unit penalty against each violated basic bound; recomputed between passes
// so a crossing flips its own term off.
inline std::vector<double> phase1_cost(const Simplex& s) {
    std::vector<double> c(s.core.total(), 0.0);
    for (int i = 0; i < s.core.m; ++i) {
        const int j = s.basic[i];
        if (s.xb[i] < s.core.lo[j] - s.opt.feas_tol) c[j] = -1.0;
        if (s.xb[i] > s.core.hi[j] + s.opt.feas_tol) c[j] = 1.0;
    }
    return c;
}

struct Presolved {
    LpProblem reduced;
    std::vector<int> col_map;      // original column -> reduced column, -1 fixed
    std::vector<double> fixed_at;  // value of each fixed original column
    bool infeasible = false;
};

inline Presolved presolve(const LpProblem& prob, double tol) {
    const std::size_t n = prob.n_vars();
    Presolved out;
    std::vector<double> lo = prob.lo, hi = prob.hi;
    std::vector<char> row_alive(prob.rows.size(), 1);

    for (std::size_t j = 0; j < n; ++j)
        if (lo[j] > hi[j] + tol) {
            out.infeasible = true;
            return out;
        }

    bool changed = true;
    int guard = 0;
    while (changed && guard++ < 50) {
        changed = false;
        for (std::size_t r = 0; r < prob.rows.size(); ++r) {
            if (!row_alive[r]) continue;
            const LpRow& row = prob.rows[r];
            double min_act = 0.0, max_act = 0.0, fixed_part = 0.0;
            int nfree = 0, free_var = -1;
            for (const auto& [j, a] : row.coeffs) {
                if (a == 0.0) continue;
                if (hi[j] - lo[j] <= 1e-14) {
                    fixed_part += a * lo[j];
                    continue;
                }
                ++nfree;
                free_var = j;
                min_act += a > 0.0 ? a * lo[j] : a * hi[j];
                max_act += a > 0.0 ? a * hi[j] : a * lo[j];
            }
            min_act += fixed_part;
            max_act += fixed_part;
            if (min_act > row.hi + tol || max_act < row.lo - tol) {
                out.infeasible = true;
                return out;
            }
            if (nfree == 0 || (min_act >= row.lo - tol && max_act <= row.hi + tol)) {
                row_alive[r] = 0;  // satisfied by any point in the boxes
                changed = true;
                continue;
            }
            if (nfree == 1) {
                double a = 0.0;
                for (const auto& [j, c] : row.coeffs)
                    if (j == free_var) a += c;
                if (std::abs(a) < 1e-14) continue;
                double b_lo = (row.lo - fixed_part) / a;
                double b_hi = (row.hi - fixed_part) / a;
                if (a < 0.0) std::swap(b_lo, b_hi);
                if (std::isfinite(b_lo) && b_lo > lo[free_var] + 1e-12) {
                    lo[free_var] = b_lo;
                    changed = true;
                }
                if (std::isfinite(b_hi) && b_hi < hi[free_var] - 1e-12) {
                    hi[free_var] = b_hi;
                    changed = true;
                }
                if (lo[free_var] > hi[free_var] + tol) {
                    out.infeasible = true;
                    return out;
                }
                if (hi[free_var] - lo[free_var] <= 1e-14) {
                    const double v = 0.5 * (lo[free_var] + hi[free_var]);
                    lo[free_var] = hi[free_var] = v;
                }
                row_alive[r] = 0;  // absorbed into the variable's bounds
                changed = true;
            }
        }
    }

    out.col_map.assign(n, -1);
    out.fixed_at.assign(n, 0.0);
    int nn = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (hi[j] - lo[j] <= 1e-14)
            out.fixed_at[j] = 0.5 * (lo[j] + hi[j]);
        else
            out.col_map[j] = nn++;
    }
    out.reduced.obj.assign(nn, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (out.col_map[j] < 0) continue;
        out.reduced.lo.push_back(lo[j]);
        out.reduced.hi.push_back(hi[j]);
        out.reduced.obj[out.col_map[j]] = prob.obj[j];
    }
    for (std::size_t r = 0; r < prob.rows.size(); ++r) {
        if (!row_alive[r]) continue;
        const LpRow& row = prob.rows[r];
        LpRow nr;
        double shift = 0.0;
        for (const auto& [j, a] : row.coeffs) {
            if (out.col_map[j] < 0)
                shift += a * out.fixed_at[j];
            else
                nr.coeffs.push_back({out.col_map[j], a});
        }
        nr.lo = std::isfinite(row.lo) ? row.lo - shift : row.lo;
        nr.hi = std::isfinite(row.hi) ? row.hi - shift : row.hi;
        out.reduced.rows.push_back(std::move(nr));
    }
    return out;
}

inline LpResult solve_core(const LpProblem& prob, const LpOptions& opt) {
    const int n = static_cast<int>(prob.n_vars());
    const int m = static_cast<int>(prob.rows.size());
    LpResult res;

    Core core;
    core.m = m;
    core.n = n;
    core.cols.resize(static_cast<std::size_t>(n) + m);
    core.lo.resize(static_cast<std::size_t>(n) + m);
    core.hi.resize(static_cast<std::size_t>(n) + m);
    core.cost.assign(static_cast<std::size_t>(n) + m, 0.0);
    for (int j = 0; j < n; ++j) {
        core.lo[j] = prob.lo[j];
        core.hi[j] = prob.hi[j];
        core.cost[j] = prob.obj[j];
        if (core.lo[j] > core.hi[j]) {
            res.status = LpStatus::infeasible;
            return res;
        }
    }
    for (int i = 0; i < m; ++i) {
        for (const auto& [j, a] : prob.rows[i].coeffs)
            if (a != 0.0) core.cols[j].push_back({i, a});
        core.cols[n + i] = {{i, -1.0}};
        core.lo[n + i] = prob.rows[i].lo;
        core.hi[n + i] = prob.rows[i].hi;
        if (core.lo[n + i] > core.hi[n + i]) {
            res.status = LpStatus::infeasible;
            return res;
        }
    }

    if (m == 0) {  // pure box problem: each variable sits at its cheap end
        res.x.assign(n, 0.0);
        for (int j = 0; j < n; ++j) {
            double v;
            if (core.cost[j] > 0.0)
                v = core.lo[j];
            else if (core.cost[j] < 0.0)
                v = core.hi[j];
            else
                v = std::isfinite(core.lo[j]) ? core.lo[j]
                                              : (std::isfinite(core.hi[j]) ? core.hi[j] : 0.0);
            if (!std::isfinite(v)) {
                res.status = LpStatus::unbounded;
                return res;
            }
            res.x[j] = v;
            res.objective += core.cost[j] * v;
        }
        res.status = LpStatus::optimal;
        res.reduced_cost = core.cost;
        return res;
    }

    Simplex s(core, opt);
    s.start_basis();
    const int iter_cap = opt.max_iters > 0 ? opt.max_iters : 20000 + 50 * m;

    // phase 1: zero-move under a freshly computed cost proves the
    // infeasibility cannot shrink further
    while (s.infeasibility() > opt.feas_tol && s.iterations < iter_cap) {
        const int before = s.iterations;
        std::vector<double> c1 = phase1_cost(s);
        s.iterate(c1, true, std::min(iter_cap, s.iterations + 40));
        if (s.iterations == before) break;
    }
    res.iterations = s.iterations;
    if (s.iterations >= iter_cap) {
        res.status = LpStatus::iteration_limit;
        return res;
    }
    if (s.infeasibility() > opt.feas_tol) {
        res.status = LpStatus::infeasible;
        return res;
    }

    const int outcome = s.iterate(core.cost, false, iter_cap);
    res.iterations = s.iterations;
    if (outcome == pass_unbounded) {
        res.status = LpStatus::unbounded;
        return res;
    }
    if (outcome == pass_cap) {
        res.status = LpStatus::iteration_limit;
        return res;
    }
    s.refactor();  // settle accumulated drift before reporting

    res.x.assign(n, 0.0);
    for (int j = 0; j < n; ++j) res.x[j] = s.colval(j);
    res.objective = 0.0;
    for (int j = 0; j < n; ++j) res.objective += core.cost[j] * res.x[j];
    res.status = LpStatus::optimal;
    const std::vector<double> y = s.duals(core.cost);
    res.row_dual = y;
    res.reduced_cost.assign(core.total(), 0.0);
    for (int j = 0; j < core.total(); ++j) res.reduced_cost[j] = s.reduced(core.cost, y, j);
    return res;
}

}  // namespace lp_detail

inline LpResult lp_solve(const LpProblem& prob, const LpOptions& opt = LpOptions{}) {
    const std::size_t n = prob.n_vars();
    if (prob.hi.size() != n || prob.obj.size() != n)
        throw Error("lp_solve: bounds/objective size mismatch");

    if (!opt.presolve) return lp_detail::solve_core(prob, opt);

    lp_detail::Presolved ps = lp_detail::presolve(prob, opt.feas_tol);
    LpResult res;
    if (ps.infeasible) {
        res.status = LpStatus::infeasible;
        return res;
    }
    LpOptions inner = opt;
    inner.presolve = false;
    LpResult sub = lp_detail::solve_core(ps.reduced, inner);
    res.status = sub.status;
    res.iterations = sub.iterations;
    if (sub.status == LpStatus::optimal) {
        res.x.assign(n, 0.0);
        for (std::size_t j = 0; j < n; ++j)
            res.x[j] = ps.col_map[j] < 0 ? ps.fixed_at[j]
                                         : sub.x[static_cast<std::size_t>(ps.col_map[j])];
        for (std::size_t j = 0; j < n; ++j) res.objective += prob.obj[j] * res.x[j];
    }
    return res;
}

}  // namespace lpp
