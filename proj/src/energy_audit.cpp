#include "snse/energy_audit.hpp"

#include "snse/errors.hpp"

#include <algorithm>
#include <cmath>

namespace snse {

double IdentityLedger::max_abs_residual(double t_max) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] > t_max + 1e-12) break;
        worst = std::max(worst, std::abs(residual[i]));
    }
    return worst;
}

namespace {

void require_ledger(const HybridPath& path) {
    if (path.blowup) throw AuditError("audit: path hit the blowup guard");
    if (!path.ledger_enabled || path.ledger.empty())
        throw AuditError("audit: path was integrated without its ledger");
}

double half_pow(double x_sq, int p) { return std::pow(x_sq, 0.5 * static_cast<double>(p)); }

IdentityLedger run_audit(const HybridPath& path, const SimConfig& cfg, int p) {
    require_ledger(path);
    const auto& rows = path.ledger;
    const double pd = static_cast<double>(p);

    IdentityLedger led;
    led.p = p;
    const std::size_t R = rows.size();
    led.times.resize(R + 1);
    led.state_p.resize(R + 1);
    led.visc_int.assign(R + 1, 0.0);
    led.lq_int.assign(R + 1, 0.0);
    led.wiener_int.assign(R + 1, 0.0);
    led.jump_mart.assign(R + 1, 0.0);
    led.comp_drift.assign(R + 1, 0.0);
    led.comp_unreduced.assign(R + 1, 0.0);
    led.residual.assign(R + 1, 0.0);

    const bool with_jumps = cfg.jumps_on;
    if (with_jumps && p >= 3) {
        for (const auto& row : rows) {
            if (row.n_atoms == 0)
                throw AuditError("audit: p >= 3 jump compensators need a discrete mark law");
        }
    }

    const double x_p = half_pow(path.initial_h_sq, p);
    std::size_t jump_idx = 0;
    double jump_sum = 0.0;   // sum over jumps of |u- + G|^p - |u-|^p

    double visc = 0.0, lq = 0.0, wiener = 0.0, comp_mart = 0.0, comp_drift = 0.0,
           comp_unreduced = 0.0;

    led.times[0] = rows.front().t;
    led.state_p[0] = half_pow(rows.front().u_h_sq, p);

    for (std::size_t i = 0; i < R; ++i) {
        const LedgerRow& row = rows[i];
        const double u_sq = row.u_h_sq;
        const double u_pm2 = (p == 2) ? 1.0 : half_pow(u_sq, p - 2);

        visc += pd * cfg.nu * u_pm2 * row.u_v_sq * row.h;
        lq += (p == 2 ? 1.0 : 0.5 * pd * (pd - 1.0)) * u_pm2 * row.hs_sq * row.h;
        // For p = 2 the stochastic columns are read straight from the
        // integrator's accumulators; higher orders reweight the increments.
        wiener = (p == 2) ? 2.0 * row.m1_after : wiener + pd * u_pm2 * row.wiener_dot;

        if (with_jumps) {
            if (p == 2) {
                // compensator of the N~ integral and the nu1 drift term
                comp_mart += (2.0 * row.comp_dot + row.comp_sq) * row.h;
                comp_drift += row.comp_sq * row.h;   // reduced form: int |G|^2 nu1
                if (row.n_atoms > 0) {
                    for (int j = 0; j < row.n_atoms; ++j) {
                        const double post = u_sq + 2.0 * row.atom_dot[j] + row.atom_gsq[j];
                        comp_unreduced +=
                            row.atom_weight[j] * (post - u_sq - 2.0 * row.atom_dot[j]) * row.h;
                    }
                } else {
                    comp_unreduced += row.comp_sq * row.h;
                }
            } else {
                for (int j = 0; j < row.n_atoms; ++j) {
                    const double post_sq = u_sq + 2.0 * row.atom_dot[j] + row.atom_gsq[j];
                    const double diff_p = half_pow(post_sq, p) - half_pow(u_sq, p);
                    comp_mart += row.atom_weight[j] * diff_p * row.h;
                    comp_drift += row.atom_weight[j] *
                                  (diff_p - pd * u_pm2 * row.atom_dot[j]) * row.h;
                }
                comp_unreduced = comp_drift;
            }
        }

        const double boundary = row.t + row.h;
        while (jump_idx < path.jump_records.size() &&
               path.jump_records[jump_idx].t < boundary) {
            const JumpRecord& rec = path.jump_records[jump_idx];
            jump_sum += half_pow(rec.post_sq(), p) - half_pow(rec.u_sq_pre, p);
            ++jump_idx;
        }

        led.times[i + 1] = boundary;
        led.state_p[i + 1] =
            (i + 1 < R) ? half_pow(rows[i + 1].u_h_sq, p) : half_pow(h_norm_sq(path.terminal_u), p);
        led.visc_int[i + 1] = visc;
        led.lq_int[i + 1] = lq;
        led.wiener_int[i + 1] = wiener;
        led.jump_mart[i + 1] = (p == 2 && with_jumps) ? row.m2_after : jump_sum - comp_mart;
        led.comp_drift[i + 1] = comp_drift;
        led.comp_unreduced[i + 1] = comp_unreduced;
        led.residual[i + 1] = led.state_p[i + 1] + led.visc_int[i + 1] -
                              (x_p + led.lq_int[i + 1] + led.wiener_int[i + 1] +
                               led.jump_mart[i + 1] + led.comp_drift[i + 1]);
    }
    return led;
}

} // namespace

IdentityLedger audit_energy(const HybridPath& path, const SimConfig& cfg) {
    return run_audit(path, cfg, 2);
}

IdentityLedger audit_pth_moment(const HybridPath& path, const SimConfig& cfg, int p) {
    if (p == 2) throw AuditError("audit_pth_moment: p = 2 is audited by audit_energy");
    if (p < 3) throw AuditError("audit_pth_moment: integer p >= 3 required");
    return run_audit(path, cfg, p);
}

MartingaleReport martingale_diagnostics(const EnsembleSummary& summary) {
    if (summary.times.size() < 5)
        throw AuditError("martingale_diagnostics: too few record times");

    MartingaleReport rep;
    for (double v : summary.m1_abs_mean) rep.sup_mean_abs_m1 = std::max(rep.sup_mean_abs_m1, v);
    for (double v : summary.m2_abs_mean) rep.sup_mean_abs_m2 = std::max(rep.sup_mean_abs_m2, v);

    const double t_end = summary.times.back();
    rep.tail_start = 0.8 * t_end;
    std::vector<double> ts, m1_ys, m1_vars, m2_ys, m2_vars;
    for (std::size_t i = 0; i < summary.times.size(); ++i) {
        if (summary.times[i] < rep.tail_start) continue;
        ts.push_back(summary.times[i]);
        m1_ys.push_back(summary.m1_abs_mean[i]);
        m1_vars.push_back(summary.m1_abs_se[i] * summary.m1_abs_se[i]);
        m2_ys.push_back(summary.m2_abs_mean[i]);
        m2_vars.push_back(summary.m2_abs_se[i] * summary.m2_abs_se[i]);
    }
    if (ts.size() < 3) throw AuditError("martingale_diagnostics: tail window too sparse");

    rep.m1_tail_trend = stats::wls_fit(ts, m1_ys, m1_vars);
    rep.m2_tail_trend = stats::wls_fit(ts, m2_ys, m2_vars);

    auto flat = [](const stats::SlopeFit& fit, double scale) {
        return std::abs(fit.slope) <= 3.0 * fit.slope_se + 1e-12 * (1.0 + scale);
    };
    rep.m1_flat = flat(rep.m1_tail_trend, rep.sup_mean_abs_m1);
    rep.m2_flat = flat(rep.m2_tail_trend, rep.sup_mean_abs_m2);
    return rep;
}

} // namespace snse
