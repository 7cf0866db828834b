#include "snse/stability_lab.hpp"

#include "snse/errors.hpp"
#include "snse/stats.hpp"

#include <algorithm>
#include <cmath>

namespace snse {

ThresholdSet thresholds(int p, double nu, double lambda1) {
    if (p < 2) throw ConfigError("thresholds: integer p >= 2 required");
    if (p > 60) throw ConfigError("thresholds: p too large (2^p overflows the denominator)");
    if (!(nu > 0.0) || !(lambda1 > 0.0))
        throw ConfigError("thresholds: nu and lambda1 must be positive");

    ThresholdSet t;
    t.p = p;
    t.nu = nu;
    t.lambda1 = lambda1;
    const long long denom =
        static_cast<long long>(p) * (p - 1) / 2 + (1LL << p) - 1 + p;
    t.jump_denominator = static_cast<double>(denom);
    t.continuous_kmax =
        (p == 2) ? 2.0 * nu * lambda1 : 2.0 * nu * lambda1 / static_cast<double>(p - 1);
    t.jump_kmax = static_cast<double>(p) * nu * lambda1 / t.jump_denominator;
    t.jump_kmax_meansq = (p == 2) ? nu * lambda1 : t.jump_kmax;
    return t;
}

double ThresholdSet::continuous_rate(double k) const {
    if (p == 2) return 0.5 * (2.0 * nu * lambda1 - k);
    const double pd = static_cast<double>(p);
    return 0.5 * (pd * nu * lambda1 - 0.5 * pd * (pd - 1.0) * k);
}

double ThresholdSet::jump_rate(double k) const {
    if (p == 2) return nu * lambda1 - k;
    const double pd = static_cast<double>(p);
    return 0.5 * (pd * nu * lambda1 - jump_denominator * k);
}

ExponentEstimate estimate_moment_exponent(const EnsembleSummary& summary, int p, double t_lo,
                                          double t_hi) {
    ExponentEstimate est;
    const auto it = std::find(summary.p_list.begin(), summary.p_list.end(), p);
    if (it == summary.p_list.end())
        throw ConfigError("estimate_moment_exponent: order p not in the ensemble's p list");
    const auto pi = static_cast<std::size_t>(it - summary.p_list.begin());
    if (!(t_lo < t_hi)) throw ConfigError("estimate_moment_exponent: empty window");

    std::vector<double> ts, ys;
    std::vector<std::size_t> idx;
    for (std::size_t r = 0; r < summary.times.size(); ++r) {
        const double t = summary.times[r];
        if (t < t_lo - 1e-12 || t > t_hi + 1e-12) continue;
        const double m = summary.moment_mean[pi][r];
        if (!(m > 0.0)) {
            est.note = "nonpositive moment estimate in window";
            return est;
        }
        // The delta method stops being meaningful once the moment estimate's
        // relative error is order one; later points carry no usable weight
        // and only destabilize the fit, so the window ends there.
        if (ts.size() >= 2 && summary.moment_se[pi][r] > 0.5 * m) break;
        ts.push_back(t);
        ys.push_back(std::log(m));
        idx.push_back(r);
    }
    if (ts.size() < 2) {
        est.note = "fewer than 2 record times in window";
        return est;
    }

    // Delta-method variance of log-moment increments, using the adjacent
    // covariance so common path noise cancels the way it does in the data.
    std::vector<double> inc_vars(ts.size() - 1, 0.0);
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
        const std::size_t ra = idx[k];
        const std::size_t rb = idx[k + 1];
        const double ma = summary.moment_mean[pi][ra];
        const double mb = summary.moment_mean[pi][rb];
        const double va = summary.moment_se[pi][ra] * summary.moment_se[pi][ra];
        const double vb = summary.moment_se[pi][rb] * summary.moment_se[pi][rb];
        double cov = 0.0;
        if (rb == ra + 1) cov = summary.moment_cov_adj[pi][ra] /
                                static_cast<double>(summary.n_used());
        const double diag = va / (ma * ma) + vb / (mb * mb);
        const double v = diag - 2.0 * cov / (ma * mb);
        // Cauchy-Schwarz keeps v >= 0 in exact arithmetic; the relative floor
        // stops a rounding-negative value from dominating the weights.
        inc_vars[k] = std::max(v, 1e-12 * diag);
    }

    const auto fit = stats::increment_gls_slope(ts, ys, inc_vars);
    est.slope = fit.slope;
    est.se = fit.degenerate ? 0.0 : fit.slope_se;
    est.log_prefactor = fit.intercept;
    est.onset_time = ts.front();
    est.ok = true;
    est.points = ts.size();
    return est;
}

AsExponentReport estimate_as_exponent(std::span<const double> pathwise_lambda,
                                      std::size_t excluded) {
    AsExponentReport rep;
    rep.excluded = excluded;
    rep.n = pathwise_lambda.size();
    if (pathwise_lambda.empty()) throw ConfigError("estimate_as_exponent: no surviving paths");
    rep.median = stats::quantile(pathwise_lambda, 0.5);
    rep.q95 = stats::quantile(pathwise_lambda, 0.95);
    const auto ms = stats::mean_se(pathwise_lambda);
    rep.mean = ms.mean;
    rep.se = ms.se;
    return rep;
}

AsExponentReport estimate_as_exponent(const std::vector<HybridPath>& paths) {
    std::vector<double> lambdas;
    std::size_t excluded = 0;
    for (const auto& path : paths) {
        if (path.blowup) {
            ++excluded;
            continue;
        }
        const double norm = h_norm(path.terminal_u);
        if (!(norm > 0.0)) {
            ++excluded;
            continue;
        }
        lambdas.push_back(std::log(norm) / path.terminal_time);
    }
    return estimate_as_exponent(lambdas, excluded);
}

std::string verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Consistent: return "consistent";
    case Verdict::Violation: return "violation";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

StabilityReport stability_verdict(int p, bool jump_mode, double nu, double lambda1,
                                  double declared_k, const ExponentEstimate& estimate,
                                  const HypothesisReport& hypotheses) {
    if (!hypotheses.all_pass)
        throw ConfigError("stability_verdict: hypotheses unverified (" +
                          (hypotheses.failure ? hypotheses.failure->inequality
                                              : std::string("empirical constant exceeded")) +
                          ")");

    StabilityReport rep;
    rep.p = p;
    rep.jump_mode = jump_mode;
    rep.declared_k = declared_k;
    rep.thresh = thresholds(p, nu, lambda1);
    rep.estimate = estimate;
    rep.threshold_gate =
        jump_mode ? rep.thresh.jump_kmax_meansq : rep.thresh.continuous_kmax;
    rep.below_threshold = declared_k < rep.threshold_gate;

    if (!rep.below_threshold) {
        rep.verdict = Verdict::Inconclusive;
        rep.detail = "declared K above threshold: no decay guarantee applies";
        return rep;
    }
    rep.guaranteed_rate = jump_mode ? rep.thresh.jump_rate(declared_k)
                                    : rep.thresh.continuous_rate(declared_k);
    if (!estimate.ok) {
        rep.verdict = Verdict::Inconclusive;
        rep.detail = "exponent estimate unavailable: " + estimate.note;
        return rep;
    }
    const double bound = -rep.guaranteed_rate;
    if (estimate.slope <= bound + 3.0 * estimate.se) {
        rep.verdict = Verdict::Consistent;
        rep.detail = "estimated exponent within the guaranteed bound";
    } else {
        rep.verdict = Verdict::Violation;
        rep.detail = "estimated exponent exceeds the guaranteed bound by more than 3 se";
    }
    return rep;
}

namespace {

std::vector<std::vector<double>> scaled(const std::vector<std::vector<double>>& amp,
                                        double factor) {
    auto out = amp;
    for (auto& row : out)
        for (double& a : row) a *= factor;
    return out;
}

} // namespace

SweepTable threshold_sweep(const SimConfig& cfg, const Model& model, int p,
                           std::span<const double> k_grid, std::size_t n_paths,
                           std::uint64_t master_seed, double window_lo, double window_hi,
                           int p_max_hypotheses, std::size_t hypothesis_samples) {
    SweepTable table;
    if (k_grid.empty()) return table;
    for (std::size_t i = 0; i + 1 < k_grid.size(); ++i)
        if (!(k_grid[i] <= k_grid[i + 1]))
            throw ConfigError("threshold_sweep: K grid must be sorted ascending");

    const JumpKernel* jumps0 = model.jumps ? &*model.jumps : nullptr;
    const double k_base = declared_growth_constant(model.diffusion, jumps0, 2);
    if (!(k_base > 0.0))
        throw ConfigError("threshold_sweep: base noise constant is zero, nothing to scale");

    for (std::size_t gi = 0; gi < k_grid.size(); ++gi) {
        const double k_target = k_grid[gi];
        if (k_target < 0.0) throw ConfigError("threshold_sweep: K must be nonnegative");
        const double factor = std::sqrt(k_target / k_base);

        Model point = model;
        point.diffusion = DiffusionFamily(model.diffusion.kind(),
                                          scaled(model.diffusion.amplitude_rows(), factor),
                                          model.diffusion.profile(), model.q);
        if (model.jumps) {
            point.jumps = JumpKernel(model.jumps->intensity(), model.jumps->marks(),
                                     model.jumps->kind(),
                                     scaled(model.jumps->amplitude_rows(), factor),
                                     model.jumps->profile());
        }

        // Common random numbers across grid points: every point reuses the
        // master seed, so estimates vary smoothly in K and a one-point sweep
        // reproduces the standalone stability run.
        const JumpKernel* jumps = point.jumps ? &*point.jumps : nullptr;
        const double declared = declared_growth_constant(point.diffusion, jumps, p);
        const auto hyp =
            verify_hypotheses(point.diffusion, cfg.jumps_on ? jumps : nullptr, point.q,
                              HypothesisMode::Constant, std::max(p_max_hypotheses, p),
                              hypothesis_samples, master_seed);

        const auto summary = ensemble(cfg, point, n_paths, master_seed, {p});
        const auto est = estimate_moment_exponent(summary, p, window_lo, window_hi);
        const auto rep = stability_verdict(p, cfg.jumps_on, cfg.nu,
                                           point.spectrum.lambda1(), declared, est, hyp);

        SweepPoint pt;
        pt.k = k_target;
        pt.estimate = est;
        pt.bound = rep.below_threshold ? -rep.guaranteed_rate : 0.0;
        pt.verdict = rep.verdict;
        table.points.push_back(pt);
    }

    for (std::size_t i = 0; i + 1 < table.points.size(); ++i) {
        const auto& a = table.points[i].estimate;
        const auto& b = table.points[i + 1].estimate;
        if (!a.ok || !b.ok) continue;
        const double slack = 3.0 * std::sqrt(a.se * a.se + b.se * b.se);
        if (b.slope < a.slope - slack) table.monotone_ok = false;
    }
    return table;
}

} // namespace snse
