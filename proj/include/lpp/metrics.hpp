#pragma once

// Approximation-quality indices for an accepted solution: per in-service
// feeder, how far the canonical fill-grid value of the squared flow sits from
// the true square, in percent, and the mean of those over each axis. Feeders
// whose flow is numerically zero are excluded from the means (a vanishing
// denominator would swamp them) but always listed as such.

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "model.hpp"
#include "network.hpp"
#include "pwl.hpp"
#include "solver.hpp"

namespace lpp {

struct ErrorIndices {
    std::vector<std::string> in_use;  // feeder ids carrying their switch closed
    // percent error per in-use feeder, active then reactive; NaN marks an
    // axis that was excluded from its mean
    std::map<std::string, std::pair<double, double>> per_feeder;
    double e_p_mean = 0.0;
    double e_q_mean = 0.0;
    std::vector<std::string> excluded_p, excluded_q;
    bool empty_in_use = false;
    // |achieved fill value - canonical fill value| per axis, available when
    // the model defining the fill variables is supplied
    std::map<std::string, std::pair<double, double>> achieved_f_gap;
};

/// Grades how well the fill grid represented each squared flow in `sol`.
/// The denominators are the exact squares; axes with a square below
/// `denom_floor` are excluded from their mean and reported by name.
inline ErrorIndices error_indices(const Network& net, const Solution& sol,
                                  const FeederBounds& bounds, int lambda,
                                  double denom_floor = 1e-8,
                                  const MilpModel* model = nullptr) {
    const std::size_t nf = net.feeders.size();
    if (sol.w.size() != nf || sol.p_flow.size() != nf || sol.q_flow.size() != nf)
        throw Error("error_indices: solution shape does not match the network");
    const double nan = std::numeric_limits<double>::quiet_NaN();

    ErrorIndices out;
    double sum_p = 0.0, sum_q = 0.0;
    int n_p = 0, n_q = 0;
    for (std::size_t f = 0; f < nf; ++f) {
        if (sol.w[f] == 0) continue;
        const std::string& id = net.feeders[f].id;
        out.in_use.push_back(id);
        auto axis = [&](double flow, double bound, std::vector<std::string>& excluded, double& sum,
                        int& n) -> double {
            const double sq = flow * flow;
            if (sq < denom_floor) {
                excluded.push_back(id);
                return nan;
            }
            const double pct = std::abs(pwl_eval(flow, {bound, lambda}) - sq) / sq * 100.0;
            sum += pct;
            ++n;
            return pct;
        };
        const double ep = axis(sol.p_flow[f], bounds.p_max[f], out.excluded_p, sum_p, n_p);
        const double eq = axis(sol.q_flow[f], bounds.q_max[f], out.excluded_q, sum_q, n_q);
        out.per_feeder[id] = {ep, eq};

        if (model != nullptr) {
            const FeederVars& fv = model->feeder_vars[f];
            auto achieved = [&](int first, double bound) {
                const auto slopes = pwl_slopes({bound, lambda});
                double val = 0.0;
                for (int k = 0; k < lambda; ++k)
                    val += slopes[static_cast<std::size_t>(k)] *
                           sol.x[static_cast<std::size_t>(first + k)];
                return val;
            };
            out.achieved_f_gap[id] = {
                std::abs(achieved(fv.fill_p, bounds.p_max[f]) -
                         pwl_eval(sol.p_flow[f], {bounds.p_max[f], lambda})),
                std::abs(achieved(fv.fill_q, bounds.q_max[f]) -
                         pwl_eval(sol.q_flow[f], {bounds.q_max[f], lambda}))};
        }
    }
    out.empty_in_use = out.in_use.empty();
    out.e_p_mean = n_p > 0 ? sum_p / n_p : 0.0;
    out.e_q_mean = n_q > 0 ? sum_q / n_q : 0.0;
    return out;
}

}  // namespace lpp
