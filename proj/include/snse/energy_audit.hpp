#pragma once

#include "snse/hybrid_integrator.hpp"
#include "snse/stats.hpp"

#include <vector>

namespace snse {

/// Term-by-term evaluation of the Ito identity for |u(t)|^p along a
/// discretized path, on the integrator's own quadrature grid. The identity
/// reads state_p + visc_int = |x|^p + lq_int + wiener_int + jump_mart +
/// comp_drift, and `residual` is LHS minus RHS at each cell boundary.
struct IdentityLedger {
    int p = 2;
    std::vector<double> times;        // sub-step boundaries, times[0] = 0
    std::vector<double> state_p;      // |u|^p at each boundary
    std::vector<double> visc_int;     // p nu int |u|^(p-2) ||u||^2 ds
    std::vector<double> lq_int;       // the L_Q integral term
    std::vector<double> wiener_int;   // the Wiener stochastic-integral term
    std::vector<double> jump_mart;    // the compensated-jump integral term
    std::vector<double> comp_drift;   // the nu1 compensator drift term
    std::vector<double> comp_unreduced; // same term before the algebraic reduction
    std::vector<double> residual;

    double max_abs_residual(double t_max) const;
};

/// p = 2 energy identity audit; requires a path integrated with its ledger.
IdentityLedger audit_energy(const HybridPath& path, const SimConfig& cfg);

/// Integer p >= 3 moment identity audit, including the binomial jump terms.
/// Needs a discrete mark law (atoms) when jumps are on; p = 2 is rejected
/// and routed to audit_energy.
IdentityLedger audit_pth_moment(const HybridPath& path, const SimConfig& cfg, int p);

/// Boundedness and tail-flatness diagnostics for the martingale
/// accumulators of an ensemble: the desk-scale proxy for almost-sure
/// convergence of M1 and M2.
struct MartingaleReport {
    double sup_mean_abs_m1 = 0.0;
    double sup_mean_abs_m2 = 0.0;
    double tail_start = 0.0;            // beginning of the last quintile
    stats::SlopeFit m1_tail_trend;      // slope of mean|M1(t)| over the tail
    stats::SlopeFit m2_tail_trend;
    bool m1_flat = true;                // |slope| <= 3 se (plus tiny floor)
    bool m2_flat = true;
};

MartingaleReport martingale_diagnostics(const EnsembleSummary& summary);

} // namespace snse
