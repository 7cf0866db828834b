#include "snse/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace snse::stats {

MeanSe mean_se(std::span<const double> xs) {
    MeanSe out;
    out.n = xs.size();
    if (xs.empty()) return out;
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return out;
    double ss = 0.0;
    for (double x : xs) {
        const double d = x - out.mean;
        ss += d * d;
    }
    const auto n = static_cast<double>(xs.size());
    out.se = std::sqrt(ss / (n * (n - 1.0)));
    return out;
}

double quantile(std::span<const double> xs, double q) {
    if (xs.empty()) throw std::invalid_argument("quantile: empty sample");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: q outside [0,1]");
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.size() == 1) return sorted.front();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

namespace {

SlopeFit ols_fallback(std::span<const double> ts, std::span<const double> ys) {
    SlopeFit fit;
    fit.degenerate = true;
    const auto n = static_cast<double>(ts.size());
    double tbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        tbar += ts[i];
        ybar += ys[i];
    }
    tbar /= n;
    ybar /= n;
    double stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        stt += (ts[i] - tbar) * (ts[i] - tbar);
        sty += (ts[i] - tbar) * (ys[i] - ybar);
    }
    if (stt <= 0.0) throw std::invalid_argument("slope fit: degenerate abscissae");
    fit.slope = sty / stt;
    fit.intercept = ybar - fit.slope * tbar;
    double rss = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double r = ys[i] - fit.intercept - fit.slope * ts[i];
        rss += r * r;
    }
    fit.slope_se = (ts.size() > 2) ? std::sqrt(rss / (n - 2.0) / stt) : 0.0;
    return fit;
}

} // namespace

SlopeFit wls_fit(std::span<const double> ts, std::span<const double> ys,
                 std::span<const double> vars, double var_floor) {
    if (ts.size() != ys.size() || ts.size() != vars.size())
        throw std::invalid_argument("wls_fit: size mismatch");
    if (ts.size() < 2) throw std::invalid_argument("wls_fit: need at least 2 points");

    bool all_floor = true;
    for (double v : vars)
        if (v > var_floor) all_floor = false;
    if (all_floor) return ols_fallback(ts, ys);

    double sw = 0.0, swt = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double w = 1.0 / std::max(vars[i], var_floor);
        sw += w;
        swt += w * ts[i];
        swy += w * ys[i];
    }
    const double tbar = swt / sw;
    const double ybar = swy / sw;
    double stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double w = 1.0 / std::max(vars[i], var_floor);
        stt += w * (ts[i] - tbar) * (ts[i] - tbar);
        sty += w * (ts[i] - tbar) * (ys[i] - ybar);
    }
    if (stt <= 0.0) throw std::invalid_argument("wls_fit: degenerate abscissae");
    SlopeFit fit;
    fit.slope = sty / stt;
    fit.intercept = ybar - fit.slope * tbar;
    fit.slope_se = std::sqrt(1.0 / stt);
    return fit;
}

SlopeFit increment_gls_slope(std::span<const double> ts, std::span<const double> ys,
                             std::span<const double> increment_vars, double var_floor) {
    if (ts.size() != ys.size() || increment_vars.size() + 1 != ts.size())
        throw std::invalid_argument("increment_gls_slope: size mismatch");
    if (ts.size() < 2) throw std::invalid_argument("increment_gls_slope: need at least 2 points");

    bool all_floor = true;
    for (double v : increment_vars)
        if (v > var_floor) all_floor = false;
    if (all_floor) return ols_fallback(ts, ys);

    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
        const double dt = ts[k + 1] - ts[k];
        if (dt <= 0.0) throw std::invalid_argument("increment_gls_slope: times not increasing");
        const double w = 1.0 / std::max(increment_vars[k], var_floor);
        num += w * dt * (ys[k + 1] - ys[k]);
        den += w * dt * dt;
    }
    SlopeFit fit;
    fit.slope = num / den;
    fit.slope_se = std::sqrt(1.0 / den);
    fit.intercept = ys.front() - fit.slope * ts.front();
    return fit;
}

namespace {

// Lanczos log-gamma, good to ~1e-15 for positive arguments.
double log_gamma(double x) {
    static const double coeff[9] = {
        0.99999999999980993,  676.5203681218851,   -1259.1392167224028,
        771.32342877765313,   -176.61502916214059, 12.507343278686905,
        -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    if (x < 0.5) {
        // reflection
        return std::log(3.14159265358979323846 / std::sin(3.14159265358979323846 * x)) -
               log_gamma(1.0 - x);
    }
    x -= 1.0;
    double a = coeff[0];
    const double t = x + 7.5;
    for (int i = 1; i < 9; ++i) a += coeff[i] / (x + static_cast<double>(i));
    return 0.5 * std::log(2.0 * 3.14159265358979323846) + (x + 0.5) * std::log(t) - t +
           std::log(a);
}

double gamma_p_series(double a, double x) {
    double sum = 1.0 / a;
    double term = sum;
    for (int n = 1; n < 10000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
}

} // namespace

double gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_contfrac(a, x);
}

double chi2_sf(double x, double dof) {
    if (dof <= 0.0) throw std::invalid_argument("chi2_sf: dof must be positive");
    if (x <= 0.0) return 1.0;
    return gamma_q(0.5 * dof, 0.5 * x);
}

Chi2Result chi2_homogeneity(std::span<const std::size_t> counts_a,
                            std::span<const std::size_t> counts_b, double min_expected) {
    if (counts_a.size() != counts_b.size())
        throw std::invalid_argument("chi2_homogeneity: histogram size mismatch");

    double total_a = 0.0, total_b = 0.0;
    for (std::size_t k = 0; k < counts_a.size(); ++k) {
        total_a += static_cast<double>(counts_a[k]);
        total_b += static_cast<double>(counts_b[k]);
    }
    const double total = total_a + total_b;
    if (total_a == 0.0 || total_b == 0.0)
        throw std::invalid_argument("chi2_homogeneity: empty sample");

    // Pool bins left to right so each pooled column expects >= min_expected
    // in both rows; the remainder joins the final bin.
    std::vector<double> pooled_a, pooled_b;
    double acc_a = 0.0, acc_b = 0.0;
    for (std::size_t k = 0; k < counts_a.size(); ++k) {
        acc_a += static_cast<double>(counts_a[k]);
        acc_b += static_cast<double>(counts_b[k]);
        const double col = acc_a + acc_b;
        if (col * total_a / total >= min_expected && col * total_b / total >= min_expected) {
            pooled_a.push_back(acc_a);
            pooled_b.push_back(acc_b);
            acc_a = acc_b = 0.0;
        }
    }
    if (acc_a + acc_b > 0.0) {
        if (pooled_a.empty()) {
            pooled_a.push_back(acc_a);
            pooled_b.push_back(acc_b);
        } else {
            pooled_a.back() += acc_a;
            pooled_b.back() += acc_b;
        }
    }

    Chi2Result out;
    out.bins_used = pooled_a.size();
    if (pooled_a.size() < 2) {
        out.dof = 0.0;
        out.p_value = 1.0;
        return out;
    }
    double stat = 0.0;
    for (std::size_t k = 0; k < pooled_a.size(); ++k) {
        const double col = pooled_a[k] + pooled_b[k];
        const double ea = col * total_a / total;
        const double eb = col * total_b / total;
        stat += (pooled_a[k] - ea) * (pooled_a[k] - ea) / ea;
        stat += (pooled_b[k] - eb) * (pooled_b[k] - eb) / eb;
    }
    out.statistic = stat;
    out.dof = static_cast<double>(pooled_a.size() - 1);
    out.p_value = chi2_sf(stat, out.dof);
    return out;
}

} // namespace snse::stats
