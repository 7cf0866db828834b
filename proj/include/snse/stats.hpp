#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace snse::stats {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;   // standard error of the mean (jackknife form)
    std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> xs);

/// q-quantile with linear interpolation; input need not be sorted.
double quantile(std::span<const double> xs, double q);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    bool degenerate = false;   // all variances below floor, plain OLS used
};

/// Weighted least squares of y against t with known per-point variances
/// (weights 1/var). Points with variance below `var_floor` trigger the
/// degenerate OLS fallback with se from residual scatter.
SlopeFit wls_fit(std::span<const double> ts, std::span<const double> ys,
                 std::span<const double> vars, double var_floor = 1e-300);

/// Slope fitted from successive increments with known increment variances:
/// generalized least squares under independent-increment noise, which is the
/// exact covariance model for Monte Carlo moment curves of linear dynamics.
SlopeFit increment_gls_slope(std::span<const double> ts, std::span<const double> ys,
                             std::span<const double> increment_vars,
                             double var_floor = 1e-300);

/// Regularized upper incomplete gamma Q(a, x) = Γ(a, x)/Γ(a).
double gamma_q(double a, double x);

/// Survival function of the chi-square distribution.
double chi2_sf(double x, double dof);

struct Chi2Result {
    double statistic = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
    std::size_t bins_used = 0;
};

/// Two-sample chi-square homogeneity test on count histograms.
/// Bins are pooled from the right until every pooled expected count is at
/// least `min_expected`.
Chi2Result chi2_homogeneity(std::span<const std::size_t> counts_a,
                            std::span<const std::size_t> counts_b,
                            double min_expected = 5.0);

} // namespace snse::stats
