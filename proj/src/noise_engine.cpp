#include "snse/noise_engine.hpp"

#include "snse/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace snse {

namespace {

void check_amplitudes(const std::vector<std::vector<double>>& amp, std::size_t modes,
                      const char* what) {
    if (amp.empty()) throw ConfigError(std::string(what) + ": needs at least one regime");
    for (const auto& row : amp) {
        if (row.size() != modes)
            throw ConfigError(std::string(what) + ": amplitude row length must equal mode count");
        for (double a : row)
            if (!std::isfinite(a))
                throw ConfigError(std::string(what) + ": amplitudes must be finite");
    }
}

} // namespace

CovarianceSpectrum::CovarianceSpectrum(std::vector<double> q) : q_(std::move(q)) {
    if (q_.empty()) throw ConfigError("covariance: needs at least one mode");
    for (double v : q_) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ConfigError("covariance: eigenvalues must be nonnegative and finite");
        trace_ += v;
    }
}

SpectralField wiener_increment(const CovarianceSpectrum& qspec, double dt, Rng& rng) {
    if (!(dt > 0.0)) throw ConfigError("wiener_increment: dt must be positive");
    SpectralField dw(qspec.modes());
    for (std::size_t k = 0; k < qspec.modes(); ++k)
        dw[k] = std::sqrt(qspec.q(k) * dt) * rng.normal();
    return dw;
}

double TimeProfile::value(double t) const {
    switch (kind) {
    case Kind::Constant: return 1.0;
    case Kind::ExpDecay: return std::exp(-beta * t);
    }
    return 1.0;
}

double TimeProfile::power_integral(double p) const {
    switch (kind) {
    case Kind::Constant: return std::numeric_limits<double>::infinity();
    case Kind::ExpDecay: return 1.0 / (p * beta);
    }
    return std::numeric_limits<double>::infinity();
}

DiffusionFamily::DiffusionFamily(DiffusionKind kind, std::vector<std::vector<double>> amplitudes,
                                 TimeProfile profile, const CovarianceSpectrum& qspec)
    : kind_(kind), amplitudes_(std::move(amplitudes)), profile_(profile) {
    check_amplitudes(amplitudes_, qspec.modes(), "diffusion");
    if (profile_.kind == TimeProfile::Kind::ExpDecay && !(profile_.beta > 0.0))
        throw ConfigError("diffusion: exp-decay profile needs beta > 0");
    for (const auto& row : amplitudes_) {
        double trace_term = 0.0;
        for (std::size_t k = 0; k < row.size(); ++k) {
            const double qa2 = qspec.q(k) * row[k] * row[k];
            sup_q_amp_sq_ = std::max(sup_q_amp_sq_, qa2);
            trace_term += qa2;
        }
        sup_trace_term_ = std::max(sup_trace_term_, trace_term);
    }
}

void DiffusionFamily::coefficients(double t, std::span<const double> u, int regime,
                                   std::span<double> out) const {
    if (regime < 1 || regime > regimes()) throw ConfigError("diffusion: regime out of range");
    if (u.size() != modes() || out.size() != modes())
        throw ConfigError("diffusion: dimension mismatch");
    const double kappa = profile_.value(t);
    const auto& amp = amplitudes_[static_cast<std::size_t>(regime - 1)];
    switch (kind_) {
    case DiffusionKind::LinearDiagonal:
        for (std::size_t k = 0; k < u.size(); ++k) out[k] = kappa * amp[k] * u[k];
        break;
    case DiffusionKind::Additive:
        for (std::size_t k = 0; k < u.size(); ++k) out[k] = kappa * amp[k];
        break;
    case DiffusionKind::BoundedSaturating: {
        const double scale = kappa / std::sqrt(1.0 + h_norm_sq(u));
        for (std::size_t k = 0; k < u.size(); ++k) out[k] = scale * amp[k] * u[k];
        break;
    }
    }
}

double DiffusionFamily::growth_constant(int p) const {
    if (p < 2) throw ConfigError("diffusion growth constant: p >= 2");
    const double half_p = 0.5 * static_cast<double>(p);
    switch (kind_) {
    case DiffusionKind::LinearDiagonal: return std::pow(sup_q_amp_sq_, half_p);
    case DiffusionKind::Additive: return std::pow(sup_trace_term_, half_p);
    case DiffusionKind::BoundedSaturating: return std::pow(sup_q_amp_sq_, half_p);
    }
    return 0.0;
}

double DiffusionFamily::lipschitz_constant(int p) const {
    if (p < 2) throw ConfigError("diffusion Lipschitz constant: p >= 2");
    const double half_p = 0.5 * static_cast<double>(p);
    switch (kind_) {
    case DiffusionKind::LinearDiagonal: return std::pow(sup_q_amp_sq_, half_p);
    case DiffusionKind::Additive: return 0.0;
    case DiffusionKind::BoundedSaturating: return std::pow(sup_q_amp_sq_, half_p);
    }
    return 0.0;
}

std::string DiffusionFamily::kind_name(DiffusionKind kind) {
    switch (kind) {
    case DiffusionKind::LinearDiagonal: return "linear-diagonal";
    case DiffusionKind::Additive: return "additive";
    case DiffusionKind::BoundedSaturating: return "bounded-saturating";
    }
    return "?";
}

double hs_norm_sq(const DiffusionFamily& diff, const CovarianceSpectrum& qspec, double t,
                  std::span<const double> u, int regime) {
    if (u.size() != qspec.modes()) throw ConfigError("hs_norm_sq: dimension mismatch");
    std::vector<double> coeff(u.size());
    diff.coefficients(t, u, regime, coeff);
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) s += qspec.q(k) * coeff[k] * coeff[k];
    return s;
}

double MarkDistribution::sample(Rng& rng) const {
    switch (kind) {
    case Kind::Fixed: return a;
    case Kind::PlusMinus: return (rng.next_u64() & 1ULL) ? a : -a;
    case Kind::Uniform: return rng.uniform(a, b);
    }
    return a;
}

double MarkDistribution::mean() const {
    switch (kind) {
    case Kind::Fixed: return a;
    case Kind::PlusMinus: return 0.0;
    case Kind::Uniform: return 0.5 * (a + b);
    }
    return 0.0;
}

double MarkDistribution::abs_moment(double p) const {
    if (p < 0.0) throw ConfigError("mark abs_moment: p >= 0");
    switch (kind) {
    case Kind::Fixed: return std::pow(std::abs(a), p);
    case Kind::PlusMinus: return std::pow(std::abs(a), p);
    case Kind::Uniform: {
        // int_a^b |z|^p dz / (b - a) with antiderivative sign(z)|z|^(p+1)/(p+1)
        auto anti = [p](double x) {
            return (x >= 0.0 ? 1.0 : -1.0) * std::pow(std::abs(x), p + 1.0) / (p + 1.0);
        };
        return (anti(b) - anti(a)) / (b - a);
    }
    }
    return 0.0;
}

std::vector<std::pair<double, double>> MarkDistribution::atoms() const {
    switch (kind) {
    case Kind::Fixed: return {{a, 1.0}};
    case Kind::PlusMinus: return {{a, 0.5}, {-a, 0.5}};
    case Kind::Uniform: return {};
    }
    return {};
}

std::string MarkDistribution::name() const {
    switch (kind) {
    case Kind::Fixed: return "fixed";
    case Kind::PlusMinus: return "pm";
    case Kind::Uniform: return "uniform";
    }
    return "?";
}

JumpKernel::JumpKernel(double intensity, MarkDistribution marks, JumpFamilyKind kind,
                       std::vector<std::vector<double>> amplitudes, TimeProfile profile)
    : intensity_(intensity), marks_(marks), kind_(kind), amplitudes_(std::move(amplitudes)),
      profile_(profile) {
    if (!(intensity_ >= 0.0) || !std::isfinite(intensity_))
        throw ConfigError("jump kernel: intensity must be finite and nonnegative");
    if (amplitudes_.empty()) throw ConfigError("jump kernel: needs at least one regime");
    const std::size_t n = amplitudes_.front().size();
    for (const auto& row : amplitudes_) {
        if (row.size() != n) throw ConfigError("jump kernel: ragged amplitude rows");
        double norm_sq = 0.0;
        for (double g : row) {
            if (!std::isfinite(g)) throw ConfigError("jump kernel: amplitudes must be finite");
            sup_amp_ = std::max(sup_amp_, std::abs(g));
            norm_sq += g * g;
        }
        sup_amp_norm_ = std::max(sup_amp_norm_, std::sqrt(norm_sq));
    }
    if (marks_.kind == MarkDistribution::Kind::Uniform && !(marks_.a < marks_.b))
        throw ConfigError("jump kernel: uniform marks need a < b");
    if (profile_.kind == TimeProfile::Kind::ExpDecay && !(profile_.beta > 0.0))
        throw ConfigError("jump kernel: exp-decay profile needs beta > 0");
}

void JumpKernel::apply(double t, std::span<const double> u, int regime, double z,
                       std::span<double> out) const {
    if (regime < 1 || regime > regimes()) throw ConfigError("jump kernel: regime out of range");
    if (u.size() != modes() || out.size() != modes())
        throw ConfigError("jump kernel: dimension mismatch");
    const double kz = profile_.value(t) * z;
    const auto& amp = amplitudes_[static_cast<std::size_t>(regime - 1)];
    if (kind_ == JumpFamilyKind::LinearDiagonal)
        for (std::size_t k = 0; k < u.size(); ++k) out[k] = kz * amp[k] * u[k];
    else
        for (std::size_t k = 0; k < u.size(); ++k) out[k] = kz * amp[k];
}

void JumpKernel::mean_jump(double t, std::span<const double> u, int regime,
                           std::span<double> out) const {
    if (regime < 1 || regime > regimes()) throw ConfigError("jump kernel: regime out of range");
    if (u.size() != modes() || out.size() != modes())
        throw ConfigError("jump kernel: dimension mismatch");
    const double factor = intensity_ * marks_.mean() * profile_.value(t);
    const auto& amp = amplitudes_[static_cast<std::size_t>(regime - 1)];
    if (kind_ == JumpFamilyKind::LinearDiagonal)
        for (std::size_t k = 0; k < u.size(); ++k) out[k] = factor * amp[k] * u[k];
    else
        for (std::size_t k = 0; k < u.size(); ++k) out[k] = factor * amp[k];
}

double JumpKernel::growth_constant(int p) const {
    if (p < 1) throw ConfigError("jump growth constant: p >= 1");
    const double base =
        (kind_ == JumpFamilyKind::LinearDiagonal) ? sup_amp_ : sup_amp_norm_;
    return intensity_ * marks_.abs_moment(static_cast<double>(p)) *
           std::pow(base, static_cast<double>(p));
}

double JumpKernel::lipschitz_constant(int p) const {
    if (p < 2) throw ConfigError("jump Lipschitz constant: p >= 2");
    if (kind_ == JumpFamilyKind::Additive) return 0.0;
    return intensity_ * marks_.abs_moment(static_cast<double>(p)) *
           std::pow(sup_amp_, static_cast<double>(p));
}

std::string JumpKernel::kind_name(JumpFamilyKind kind) {
    return kind == JumpFamilyKind::LinearDiagonal ? "linear-diagonal" : "additive";
}

std::vector<JumpEvent> sample_jumps(const JumpKernel& kern, double t0, double dt, Rng& rng) {
    if (!(dt > 0.0)) throw ConfigError("sample_jumps: dt must be positive");
    std::vector<JumpEvent> events;
    if (kern.intensity() <= 0.0) return events;
    const std::uint64_t count = rng.poisson(kern.intensity() * dt);
    events.reserve(count);
    for (std::uint64_t n = 0; n < count; ++n) {
        const double t = t0 + dt * rng.uniform01();
        const double z = kern.marks().sample(rng);
        events.push_back({t, z});
    }
    std::sort(events.begin(), events.end(),
              [](const JumpEvent& x, const JumpEvent& y) { return x.time < y.time; });
    return events;
}

double compensator_integral(const JumpKernel& kern, double t, std::span<const double> u,
                            int regime, double p) {
    if (p < 1.0) throw ConfigError("compensator_integral: p >= 1");
    if (regime < 1 || regime > kern.regimes())
        throw ConfigError("compensator_integral: regime out of range");
    if (u.size() != kern.modes()) throw ConfigError("compensator_integral: dimension mismatch");

    const auto& amp = kern.amplitude_row(regime);
    double base_sq = 0.0;
    if (kern.kind() == JumpFamilyKind::LinearDiagonal)
        for (std::size_t k = 0; k < u.size(); ++k) base_sq += amp[k] * amp[k] * u[k] * u[k];
    else
        for (std::size_t k = 0; k < u.size(); ++k) base_sq += amp[k] * amp[k];

    const double kappa = kern.profile().value(t);
    return kern.intensity() * kern.marks().abs_moment(p) * std::pow(kappa, p) *
           std::pow(base_sq, 0.5 * p);
}

namespace {

double pow_int(double x, int p) {
    double r = 1.0;
    for (int n = 0; n < p; ++n) r *= x;
    return r;
}

} // namespace

HypothesisReport verify_hypotheses(const DiffusionFamily& diff, const JumpKernel* jumps,
                                   const CovarianceSpectrum& qspec, HypothesisMode mode,
                                   int p_max, std::size_t samples, std::uint64_t seed) {
    if (p_max < 2) throw ConfigError("verify_hypotheses: p_max >= 2");
    if (samples == 0) throw ConfigError("verify_hypotheses: needs samples");
    if (mode == HypothesisMode::TimeDependent) {
        if (!diff.profile().integrable())
            throw ConfigError("verify_hypotheses: H' mode needs an integrable sigma profile");
        if (jumps && !jumps->profile().integrable())
            throw ConfigError("verify_hypotheses: H' mode needs an integrable jump profile");
    }

    HypothesisReport report;
    report.mode = mode;
    report.samples = samples;
    for (int p = 2; p <= p_max; ++p) {
        HypothesisRow row;
        row.p = p;
        row.sigma_growth_decl = diff.growth_constant(p);
        row.sigma_lip_decl = diff.lipschitz_constant(p);
        if (jumps) {
            row.jump_growth_decl = jumps->growth_constant(p);
            row.jump_lip_decl = jumps->lipschitz_constant(p);
        }
        report.rows.push_back(row);
    }

    Rng rng(Rng::derive(seed, rng_stream::kHypotheses, 0));
    const std::size_t n = qspec.modes();
    std::vector<double> u(n), v(n), cu(n), cv(n);
    const double probe_horizon =
        diff.profile().integrable() ? 5.0 / diff.profile().beta : 10.0;

    auto tolerate = [](double emp, double decl) { return emp <= decl * (1.0 + 1e-9) + 1e-12; };

    for (std::size_t s = 0; s < samples; ++s) {
        const double t = rng.uniform(0.0, probe_horizon);
        const int regime = 1 + static_cast<int>(rng.next_u64() %
                                                static_cast<std::uint64_t>(diff.regimes()));
        const double radius = std::pow(10.0, rng.uniform(-2.0, 3.0));
        for (std::size_t k = 0; k < n; ++k) {
            u[k] = radius * rng.normal();
            v[k] = radius * rng.normal();
        }
        const double u_sq = h_norm_sq(u);
        const double uv_sq = [&] {
            double d = 0.0;
            for (std::size_t k = 0; k < n; ++k) d += (u[k] - v[k]) * (u[k] - v[k]);
            return d;
        }();

        const double hs_u = hs_norm_sq(diff, qspec, t, u, regime);
        diff.coefficients(t, u, regime, cu);
        diff.coefficients(t, v, regime, cv);
        double hs_diff = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            hs_diff += qspec.q(k) * (cu[k] - cv[k]) * (cu[k] - cv[k]);

        const double kappa_sigma = diff.profile().value(t);
        const double kappa_jump = jumps ? jumps->profile().value(t) : 1.0;

        for (auto& row : report.rows) {
            const int p = row.p;
            const double u_p = std::pow(u_sq, 0.5 * p);
            const double uv_p = std::pow(uv_sq, 0.5 * p);

            // H-mode bounds use constants; H'-mode bounds decay with kappa^p.
            const double sigma_env =
                (mode == HypothesisMode::Constant) ? 1.0 : pow_int(kappa_sigma, p);
            const double jump_env =
                (mode == HypothesisMode::Constant) ? 1.0 : pow_int(kappa_jump, p);

            const double growth_ratio = std::pow(hs_u, 0.5 * p) / (sigma_env * (1.0 + u_p));
            row.sigma_growth_emp = std::max(row.sigma_growth_emp, growth_ratio);
            if (!tolerate(growth_ratio, row.sigma_growth_decl) && !report.failure) {
                report.failure = HypothesisWitness{"sigma growth p=" + std::to_string(p),
                                                   t,
                                                   regime,
                                                   std::pow(hs_u, 0.5 * p),
                                                   row.sigma_growth_decl * sigma_env * (1.0 + u_p),
                                                   u,
                                                   {}};
            }

            if (uv_sq > 0.0) {
                const double lip_ratio = std::pow(hs_diff, 0.5 * p) / (sigma_env * uv_p);
                row.sigma_lip_emp = std::max(row.sigma_lip_emp, lip_ratio);
                if (!tolerate(lip_ratio, row.sigma_lip_decl) && !report.failure) {
                    report.failure =
                        HypothesisWitness{"sigma Lipschitz p=" + std::to_string(p),
                                          t,
                                          regime,
                                          std::pow(hs_diff, 0.5 * p),
                                          row.sigma_lip_decl * sigma_env * uv_p,
                                          u,
                                          v};
                }
            }

            if (jumps) {
                const double jg = compensator_integral(*jumps, t, u, regime,
                                                       static_cast<double>(p));
                const double jg_ratio = jg / (jump_env * (1.0 + u_p));
                row.jump_growth_emp = std::max(row.jump_growth_emp, jg_ratio);
                if (!tolerate(jg_ratio, row.jump_growth_decl) && !report.failure) {
                    report.failure = HypothesisWitness{"jump growth p=" + std::to_string(p),
                                                       t,
                                                       regime,
                                                       jg,
                                                       row.jump_growth_decl * jump_env *
                                                           (1.0 + u_p),
                                                       u,
                                                       {}};
                }
                if (uv_sq > 0.0 && jumps->kind() == JumpFamilyKind::LinearDiagonal) {
                    // |G(u,z) - G(v,z)| = kappa |z| sqrt(sum g^2 (u-v)^2)
                    const auto& amp = jumps->amplitude_row(regime);
                    double d_sq = 0.0;
                    for (std::size_t k = 0; k < n; ++k)
                        d_sq += amp[k] * amp[k] * (u[k] - v[k]) * (u[k] - v[k]);
                    const double jl = jumps->intensity() *
                                      jumps->marks().abs_moment(static_cast<double>(p)) *
                                      pow_int(kappa_jump, p) * std::pow(d_sq, 0.5 * p);
                    const double jl_ratio = jl / (jump_env * uv_p);
                    row.jump_lip_emp = std::max(row.jump_lip_emp, jl_ratio);
                    if (!tolerate(jl_ratio, row.jump_lip_decl) && !report.failure) {
                        report.failure =
                            HypothesisWitness{"jump Lipschitz p=" + std::to_string(p),
                                              t,
                                              regime,
                                              jl,
                                              row.jump_lip_decl * jump_env * uv_p,
                                              u,
                                              v};
                    }
                }
            }
        }
    }

    for (auto& row : report.rows) {
        row.pass = tolerate(row.sigma_growth_emp, row.sigma_growth_decl) &&
                   tolerate(row.sigma_lip_emp, row.sigma_lip_decl) &&
                   tolerate(row.jump_growth_emp, row.jump_growth_decl) &&
                   tolerate(row.jump_lip_emp, row.jump_lip_decl);
        report.all_pass = report.all_pass && row.pass;
    }

    report.k_declared = declared_growth_constant(diff, jumps, 2);
    report.k_inf = report.k_declared;
    if (mode == HypothesisMode::TimeDependent) {
        double l1 = diff.growth_constant(2) * diff.profile().power_integral(2.0);
        if (jumps) l1 += jumps->growth_constant(2) * jumps->profile().power_integral(2.0);
        report.k_l1 = l1;
    } else {
        report.k_l1 = std::numeric_limits<double>::infinity();
    }
    return report;
}

double declared_growth_constant(const DiffusionFamily& diff, const JumpKernel* jumps, int p) {
    if (p < 2) throw ConfigError("declared_growth_constant: p >= 2");
    double k = diff.growth_constant(2);
    if (jumps) {
        if (p == 2) {
            k = std::max(k, jumps->growth_constant(2));
        } else {
            for (int n = 1; n <= p; ++n) k = std::max(k, jumps->growth_constant(n));
        }
    }
    return k;
}

} // namespace snse
