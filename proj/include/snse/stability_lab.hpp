#pragma once

#include "snse/hybrid_integrator.hpp"
#include "snse/noise_engine.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace snse {

/// Closed-form stability thresholds on the noise growth constant K and the
/// guaranteed decay rates below them, for moment order p.
struct ThresholdSet {
    int p = 2;
    double nu = 1.0;
    double lambda1 = 1.0;
    double continuous_kmax = 0.0;    // 2 nu l1 (p = 2); 2 nu l1 / (p - 1) (p >= 3)
    double jump_kmax = 0.0;          // p nu l1 / (p(p-1)/2 + 2^p - 1 + p)
    double jump_kmax_meansq = 0.0;   // nu l1 at p = 2: validity gate of the
                                     // mean-square jump decay rate
    double jump_denominator = 0.0;   // p(p-1)/2 + 2^p - 1 + p

    /// Guaranteed decay rates (positive numbers; exponent bound is -rate),
    /// valid below the matching threshold.
    double continuous_rate(double k) const;
    double jump_rate(double k) const;

    /// Almost-sure exponent bounds from the time-dependent hypotheses.
    double as_bound_continuous(double k_inf) const { return 0.5 * (k_inf - 2.0 * nu * lambda1); }
    double as_bound_jump(double k_inf) const { return k_inf - nu * lambda1; }
};

ThresholdSet thresholds(int p, double nu, double lambda1);

/// Moment-exponent estimate: slope of log E|u(t)|^p over a time window.
/// The fitted intercept and window start stand in for the existential
/// prefactor and onset time of the decay bounds, reported, never assumed.
struct ExponentEstimate {
    double slope = 0.0;
    double se = 0.0;
    double log_prefactor = 0.0;   // fitted log E|u|^p extrapolated to t = 0
    double onset_time = 0.0;      // start of the fit window
    bool ok = false;              // false: nonpositive moments or empty window
    std::size_t points = 0;
    std::string note;
};

/// Least-squares slope of log moment against time. The fit is weighted by
/// increments with delta-method variances from the moment standard errors
/// and adjacent covariances, which is the exact noise model for moment
/// curves of linear dynamics.
ExponentEstimate estimate_moment_exponent(const EnsembleSummary& summary, int p, double t_lo,
                                          double t_hi);

struct AsExponentReport {
    double median = 0.0;
    double q95 = 0.0;
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
    std::size_t excluded = 0;   // blowup / zero-norm paths
};

AsExponentReport estimate_as_exponent(std::span<const double> pathwise_lambda,
                                      std::size_t excluded);
AsExponentReport estimate_as_exponent(const std::vector<HybridPath>& paths);

enum class Verdict { Consistent, Violation, Inconclusive };

std::string verdict_name(Verdict v);

struct StabilityReport {
    int p = 2;
    bool jump_mode = false;
    double declared_k = 0.0;
    ThresholdSet thresh;
    double threshold_gate = 0.0;    // validity gate for the guaranteed rate
    bool below_threshold = false;
    double guaranteed_rate = 0.0;   // positive decay rate when below threshold
    ExponentEstimate estimate;
    Verdict verdict = Verdict::Inconclusive;
    std::string detail;
};

/// Verdict "consistent" iff the estimated exponent respects the guaranteed
/// bound within 3 standard errors when below threshold; above threshold the
/// guarantees say nothing and the verdict is "inconclusive". Refuses when
/// the hypotheses report failed.
StabilityReport stability_verdict(int p, bool jump_mode, double nu, double lambda1,
                                  double declared_k, const ExponentEstimate& estimate,
                                  const HypothesisReport& hypotheses);

struct SweepPoint {
    double k = 0.0;
    ExponentEstimate estimate;
    double bound = 0.0;   // exponent bound (-rate) when below threshold
    Verdict verdict = Verdict::Inconclusive;
};

struct SweepTable {
    std::vector<SweepPoint> points;
    bool monotone_ok = true;   // estimated exponent nondecreasing in K (3 se slack)
};

/// Rescales the noise amplitudes so the declared p = 2 constant hits each
/// grid value, reruns the ensemble, and issues one verdict per point.
SweepTable threshold_sweep(const SimConfig& cfg, const Model& model, int p,
                           std::span<const double> k_grid, std::size_t n_paths,
                           std::uint64_t master_seed, double window_lo, double window_hi,
                           int p_max_hypotheses, std::size_t hypothesis_samples);

} // namespace snse
