#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "lpp/lp_solver.hpp"

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

lpp::LpProblem make_problem(std::vector<double> lo, std::vector<double> hi,
                            std::vector<double> obj) {
    lpp::LpProblem p;
    p.lo = std::move(lo);
    p.hi = std::move(hi);
    p.obj = std::move(obj);
    return p;
}

void add_row(lpp::LpProblem& p, std::vector<std::pair<int, double>> coeffs, double lo, double hi) {
    lpp::LpRow r;
    r.coeffs = std::move(coeffs);
    r.lo = lo;
    r.hi = hi;
    p.rows.push_back(std::move(r));
}

double row_activity(const lpp::LpRow& r, const std::vector<double>& x) {
    double s = 0.0;
    for (const auto& [j, a] : r.coeffs) s += a * x[static_cast<std::size_t>(j)];
    return s;
}

// Point feasibility against the original problem data.
void check_feasible(const lpp::LpProblem& p, const std::vector<double>& x, double tol) {
    REQUIRE(x.size() == p.n_vars());
    for (std::size_t j = 0; j < p.n_vars(); ++j) {
        CHECK(x[j] >= p.lo[j] - tol);
        CHECK(x[j] <= p.hi[j] + tol);
    }
    for (const auto& r : p.rows) {
        const double act = row_activity(r, x);
        CHECK(act >= r.lo - tol);
        CHECK(act <= r.hi + tol);
    }
}

// Full optimality certificate for a minimization over lo <= x <= hi,
// row.lo <= Ax <= row.hi, checked from the returned multipliers alone:
//  1. the reported reduced costs are really obj - y.A (and y itself for the
//     row slacks),
//  2. every column's reduced cost has the sign its resting bound requires,
//  3. the Lagrangian identity obj.x == sum d_j x_j holds, and
//  4. the dual bound built from the favorable bounds matches the objective.
// Together these prove the point is optimal, independent of how the solver
// found it.
void check_certificate(const lpp::LpProblem& p, const lpp::LpResult& res) {
    const double tol = 2e-6;
    const std::size_t n = p.n_vars();
    const std::size_t m = p.rows.size();
    REQUIRE(res.status == lpp::LpStatus::optimal);
    REQUIRE(res.row_dual.size() == m);
    REQUIRE(res.reduced_cost.size() == n + m);

    std::vector<double> d(n + m, 0.0);
    for (std::size_t j = 0; j < n; ++j) d[j] = p.obj[j];
    for (std::size_t i = 0; i < m; ++i)
        for (const auto& [j, a] : p.rows[i].coeffs) d[static_cast<std::size_t>(j)] -= res.row_dual[i] * a;
    for (std::size_t i = 0; i < m; ++i) d[n + i] = res.row_dual[i];
    for (std::size_t j = 0; j < n + m; ++j) CHECK(d[j] == Catch::Approx(res.reduced_cost[j]).margin(1e-7));

    // value and box of every column, slacks included
    std::vector<double> v(n + m), vlo(n + m), vhi(n + m);
    for (std::size_t j = 0; j < n; ++j) {
        v[j] = res.x[j];
        vlo[j] = p.lo[j];
        vhi[j] = p.hi[j];
    }
    for (std::size_t i = 0; i < m; ++i) {
        v[n + i] = row_activity(p.rows[i], res.x);
        vlo[n + i] = p.rows[i].lo;
        vhi[n + i] = p.rows[i].hi;
    }

    double lagrangian = 0.0, dual_bound = 0.0;
    for (std::size_t j = 0; j < n + m; ++j) {
        lagrangian += d[j] * v[j];
        if (std::abs(d[j]) <= tol) continue;
        if (vhi[j] - vlo[j] > 2e-6) {
            if (d[j] > 0.0)
                CHECK(v[j] <= vlo[j] + 1e-6);
            else
                CHECK(v[j] >= vhi[j] - 1e-6);
        }
        if (d[j] > 0.0) {
            REQUIRE(std::isfinite(vlo[j]));
            dual_bound += d[j] * vlo[j];
        } else {
            REQUIRE(std::isfinite(vhi[j]));
            dual_bound += d[j] * vhi[j];
        }
    }
    const double scale = 1.0 + std::abs(res.objective);
    CHECK(std::abs(lagrangian - res.objective) <= tol * scale);
    CHECK(std::abs(dual_bound - res.objective) <= tol * scale);
}

// Instances built around a known interior point so feasibility (and, with
// all boxes finite, boundedness) holds by construction.
lpp::LpProblem random_feasible(std::mt19937& rng, int max_n = 8, int max_m = 10) {
    std::uniform_int_distribution<int> nvars(1, max_n);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const int n = nvars(rng);
    lpp::LpProblem p;
    std::vector<double> x0(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double lo = -5.0 * u01(rng);
        const double w = 0.5 + 5.5 * u01(rng);
        p.lo.push_back(lo);
        p.hi.push_back(lo + w);
        p.obj.push_back(-3.0 + 6.0 * u01(rng));
        x0[static_cast<std::size_t>(j)] = lo + (0.15 + 0.7 * u01(rng)) * w;
    }
    std::uniform_int_distribution<int> nrows(0, max_m);
    const int m = nrows(rng);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (int r = 0; r < m; ++r) {
        std::shuffle(order.begin(), order.end(), rng);
        const int k = 1 + static_cast<int>(u01(rng) * std::min(n, 4)) % std::min(n, 4);
        lpp::LpRow row;
        double act = 0.0;
        for (int t = 0; t < k; ++t) {
            const int j = order[static_cast<std::size_t>(t)];
            double a = 0.3 + 3.7 * u01(rng);
            if (u01(rng) < 0.5) a = -a;
            row.coeffs.push_back({j, a});
            act += a * x0[static_cast<std::size_t>(j)];
        }
        const int kind = static_cast<int>(u01(rng) * 4.0) % 4;
        switch (kind) {
            case 0:
                row.lo = act - 2.0 * u01(rng);
                row.hi = act + 2.0 * u01(rng);
                break;
            case 1:
                row.lo = -kInf;
                row.hi = act + 2.0 * u01(rng);
                break;
            case 2:
                row.lo = act - 2.0 * u01(rng);
                row.hi = kInf;
                break;
            default:
                row.lo = act;
                row.hi = act;
                break;
        }
        p.rows.push_back(std::move(row));
    }
    return p;
}

}  // namespace

TEST_CASE("pure box problems pick the cheap end of every interval") {
    auto p = make_problem({-1.0, 0.0}, {4.0, 5.0}, {2.0, -3.0});
    const auto res = lpp::lp_solve(p);
    REQUIRE(res.status == lpp::LpStatus::optimal);
    CHECK(res.x[0] == Catch::Approx(-1.0));
    CHECK(res.x[1] == Catch::Approx(5.0));
    CHECK(res.objective == Catch::Approx(-17.0));

    auto q = make_problem({-kInf}, {kInf}, {0.0});
    const auto r2 = lpp::lp_solve(q);
    REQUIRE(r2.status == lpp::LpStatus::optimal);
    CHECK(r2.x[0] == 0.0);

    auto ub = make_problem({-kInf}, {kInf}, {-1.0});
    CHECK(lpp::lp_solve(ub).status == lpp::LpStatus::unbounded);
}

TEST_CASE("small two variable problem reaches the hand solved corner") {
    // min -x - 2y with x + y <= 4, x - y >= -2 and boxes [0,3]^2: the two
    // rows meet at (1,3), objective -7
    auto p = make_problem({0.0, 0.0}, {3.0, 3.0}, {-1.0, -2.0});
    add_row(p, {{0, 1.0}, {1, 1.0}}, -kInf, 4.0);
    add_row(p, {{0, 1.0}, {1, -1.0}}, -2.0, kInf);
    for (const bool pre : {false, true}) {
        lpp::LpOptions opt;
        opt.presolve = pre;
        const auto res = lpp::lp_solve(p, opt);
        REQUIRE(res.status == lpp::LpStatus::optimal);
        CHECK(res.objective == Catch::Approx(-7.0));
        CHECK(res.x[0] == Catch::Approx(1.0));
        CHECK(res.x[1] == Catch::Approx(3.0));
        check_feasible(p, res.x, 1e-8);
        if (!pre) check_certificate(p, res);
    }
}

TEST_CASE("ranged and equality rows are honored") {
    // min x + y with 2 <= x + y <= 5: the range's lower edge is the optimum
    auto p = make_problem({0.0, 0.0}, {10.0, 10.0}, {1.0, 1.0});
    add_row(p, {{0, 1.0}, {1, 1.0}}, 2.0, 5.0);
    auto res = lpp::lp_solve(p, lpp::LpOptions{});
    REQUIRE(res.status == lpp::LpStatus::optimal);
    CHECK(res.objective == Catch::Approx(2.0));

    // chained equalities force every link to the shared value
    auto q = make_problem({0.0, 0.0, 0.0}, {5.0, 5.0, 5.0}, {0.0, 0.0, -1.0});
    add_row(q, {{0, 1.0}, {1, -1.0}}, 0.0, 0.0);
    add_row(q, {{1, 1.0}, {2, -1.0}}, 0.0, 0.0);
    for (const bool pre : {false, true}) {
        lpp::LpOptions opt;
        opt.presolve = pre;
        const auto r2 = lpp::lp_solve(q, opt);
        REQUIRE(r2.status == lpp::LpStatus::optimal);
        CHECK(r2.objective == Catch::Approx(-5.0));
        CHECK(r2.x[0] == Catch::Approx(5.0));
        CHECK(r2.x[1] == Catch::Approx(5.0));
        if (!pre) check_certificate(q, r2);
    }
}

TEST_CASE("binding at a range lower edge yields a nonnegative multiplier") {
    auto p = make_problem({0.0, 0.0}, {10.0, 1.0}, {1.0, 0.0});
    add_row(p, {{0, 1.0}, {1, 1.0}}, 2.0, 5.0);
    lpp::LpOptions opt;
    opt.presolve = false;
    const auto res = lpp::lp_solve(p, opt);
    REQUIRE(res.status == lpp::LpStatus::optimal);
    CHECK(res.objective == Catch::Approx(1.0));
    CHECK(res.row_dual[0] >= -1e-9);
    check_certificate(p, res);
}

TEST_CASE("free variables can carry the optimum") {
    // a free variable pushed against a row cap from below
    auto p = make_problem({-kInf}, {kInf}, {-1.0});
    add_row(p, {{0, 1.0}}, -kInf, 7.0);
    for (const bool pre : {false, true}) {
        lpp::LpOptions opt;
        opt.presolve = pre;
        const auto res = lpp::lp_solve(p, opt);
        REQUIRE(res.status == lpp::LpStatus::optimal);
        CHECK(res.objective == Catch::Approx(-7.0));
        CHECK(res.x[0] == Catch::Approx(7.0));
        if (!pre) check_certificate(p, res);
    }
}

TEST_CASE("a cost ray through a satisfiable row is reported unbounded") {
    // x - y <= 3 never blocks the diagonal ray, so min -x diverges
    auto p = make_problem({0.0, 0.0}, {kInf, kInf}, {-1.0, 0.0});
    add_row(p, {{0, 1.0}, {1, -1.0}}, -kInf, 3.0);
    for (const bool pre : {false, true}) {
        lpp::LpOptions opt;
        opt.presolve = pre;
        const auto res = lpp::lp_solve(p, opt);
        CHECK(res.status == lpp::LpStatus::unbounded);
        CHECK(res.x.empty());
    }
}

TEST_CASE("an impossible row is reported infeasible") {
    auto p = make_problem({0.0, 0.0}, {2.0, 2.0}, {1.0, 1.0});
    add_row(p, {{0, 1.0}, {1, 1.0}}, 5.0, kInf);
    for (const bool pre : {false, true}) {
        lpp::LpOptions opt;
        opt.presolve = pre;
        const auto res = lpp::lp_solve(p, opt);
        CHECK(res.status == lpp::LpStatus::infeasible);
        CHECK(res.x.empty());
    }
}

TEST_CASE("crossed variable bounds are reported infeasible") {
    auto p = make_problem({1.0}, {0.0}, {1.0});
    for (const bool pre : {false, true}) {
        lpp::LpOptions opt;
        opt.presolve = pre;
        CHECK(lpp::lp_solve(p, opt).status == lpp::LpStatus::infeasible);
    }
}

TEST_CASE("duplicate binding rows keep the certificate intact") {
    auto p = make_problem({0.0}, {2.0}, {-1.0});
    add_row(p, {{0, 1.0}}, -kInf, 1.0);
    add_row(p, {{0, 1.0}}, -kInf, 1.0);
    add_row(p, {{0, 1.0}}, -kInf, 1.0);
    lpp::LpOptions opt;
    opt.presolve = false;
    const auto res = lpp::lp_solve(p, opt);
    REQUIRE(res.status == lpp::LpStatus::optimal);
    CHECK(res.objective == Catch::Approx(-1.0));
    check_certificate(p, res);
}

TEST_CASE("the iteration cap surfaces as a status instead of a wrong answer") {
    auto p = make_problem({0.0, 0.0}, {3.0, 3.0}, {-1.0, -2.0});
    add_row(p, {{0, 1.0}, {1, 1.0}}, -kInf, 4.0);
    add_row(p, {{0, 1.0}, {1, -1.0}}, -2.0, kInf);
    lpp::LpOptions opt;
    opt.presolve = false;
    opt.max_iters = 1;
    const auto res = lpp::lp_solve(p, opt);
    CHECK(res.status == lpp::LpStatus::iteration_limit);
    CHECK(res.x.empty());
}

TEST_CASE("mismatched bound and objective lengths are rejected") {
    lpp::LpProblem p;
    p.lo = {0.0, 0.0};
    p.hi = {1.0};
    p.obj = {1.0, 1.0};
    CHECK_THROWS_AS(lpp::lp_solve(p), lpp::Error);
}

TEST_CASE("presolve absorbs singletons and drops slack rows") {
    // a singleton row becomes a bound and the wide row disappears, leaving a
    // box-only problem with the same optimum
    auto p = make_problem({0.0, 0.0}, {10.0, 1.0}, {-1.0, 0.0});
    add_row(p, {{0, 2.0}}, -kInf, 6.0);
    add_row(p, {{0, 1.0}, {1, 1.0}}, -100.0, 100.0);
    const auto ps = lpp::lp_detail::presolve(p, 1e-8);
    REQUIRE_FALSE(ps.infeasible);
    CHECK(ps.reduced.rows.empty());
    const auto res = lpp::lp_solve(p);
    REQUIRE(res.status == lpp::LpStatus::optimal);
    CHECK(res.objective == Catch::Approx(-3.0));
    CHECK(res.x[0] == Catch::Approx(3.0));
}

TEST_CASE("presolve substitutes pinned columns into the remaining rows") {
    // x is pinned at 2 by its box; y >= x must still see that constant
    auto p = make_problem({2.0, 0.0}, {2.0, 10.0}, {0.0, 1.0});
    add_row(p, {{1, 1.0}, {0, -1.0}}, 0.0, kInf);
    const auto res = lpp::lp_solve(p);
    REQUIRE(res.status == lpp::LpStatus::optimal);
    CHECK(res.x[0] == Catch::Approx(2.0));
    CHECK(res.x[1] == Catch::Approx(2.0));
    CHECK(res.objective == Catch::Approx(2.0));
}

TEST_CASE("random feasible instances are solved to a certified optimum") {
    std::mt19937 rng(20260822u);
    for (int trial = 0; trial < 300; ++trial) {
        const auto p = random_feasible(rng);
        INFO("trial " << trial << " with " << p.n_vars() << " vars, " << p.rows.size()
                      << " rows");
        lpp::LpOptions raw;
        raw.presolve = false;
        const auto res = lpp::lp_solve(p, raw);
        REQUIRE(res.status == lpp::LpStatus::optimal);
        check_feasible(p, res.x, 1e-6);
        check_certificate(p, res);

        const auto pre = lpp::lp_solve(p);
        REQUIRE(pre.status == lpp::LpStatus::optimal);
        check_feasible(p, pre.x, 1e-6);
        CHECK(std::abs(pre.objective - res.objective) <= 1e-6 * (1.0 + std::abs(res.objective)));
    }
}

TEST_CASE("larger instances exercise the refactor path") {
    std::mt19937 rng(777u);
    for (int trial = 0; trial < 10; ++trial) {
        const auto p = random_feasible(rng, 40, 60);
        INFO("trial " << trial << " with " << p.n_vars() << " vars, " << p.rows.size()
                      << " rows");
        lpp::LpOptions raw;
        raw.presolve = false;
        const auto res = lpp::lp_solve(p, raw);
        REQUIRE(res.status == lpp::LpStatus::optimal);
        check_feasible(p, res.x, 1e-6);
        check_certificate(p, res);

        const auto pre = lpp::lp_solve(p);
        REQUIRE(pre.status == lpp::LpStatus::optimal);
        CHECK(std::abs(pre.objective - res.objective) <= 2e-6 * (1.0 + std::abs(res.objective)));
    }
}

TEST_CASE("random instances with an unreachable row are proven infeasible") {
    std::mt19937 rng(31415u);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        auto p = random_feasible(rng);
        const int n = static_cast<int>(p.n_vars());
        lpp::LpRow killer;
        double max_act = 0.0;
        for (int j = 0; j < n; ++j) {
            double a = 0.5 + 3.0 * u01(rng);
            if (u01(rng) < 0.5) a = -a;
            killer.coeffs.push_back({j, a});
            max_act += std::max(a * p.lo[static_cast<std::size_t>(j)],
                                a * p.hi[static_cast<std::size_t>(j)]);
        }
        killer.lo = max_act + 0.5 + 1.5 * u01(rng);
        killer.hi = kInf;
        p.rows.push_back(std::move(killer));
        INFO("trial " << trial);
        for (const bool pre : {false, true}) {
            lpp::LpOptions opt;
            opt.presolve = pre;
            CHECK(lpp::lp_solve(p, opt).status == lpp::LpStatus::infeasible);
        }
    }
}
