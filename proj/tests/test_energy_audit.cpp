#include "snse/energy_audit.hpp"

#include "snse/errors.hpp"
#include "test_models.hpp"

#include <doctest.h>

#include <cmath>

using namespace snse;
using namespace snse::testkit;

namespace {

double max_energy_residual(double dt, double t_max) {
    auto model = scalar_linear(1.0, 1.0, 0.0);
    const auto cfg = quick_sim(1.0, dt, t_max);
    const auto path = integrate_path(cfg, model, 5, 0, true);
    return audit_energy(path, cfg).max_abs_residual(t_max);
}

} // namespace

TEST_SUITE("energy_audit") {

TEST_CASE("residual starts at exactly zero") {
    auto model = scalar_linear(1.0, 1.0, 0.4);
    const auto cfg = quick_sim(1.0, 1e-2, 0.5);
    const auto path = integrate_path(cfg, model, 2, 0, true);
    const auto led = audit_energy(path, cfg);
    CHECK(led.residual.front() == 0.0);
    CHECK(led.times.front() == 0.0);
}

TEST_CASE("deterministic linear run: residual is pure quadrature error") {
    // max residual = sum of |drift|^2 h^2 terms for the linear problem;
    // independent oracle: dt * integral of (nu lambda1)^2 u(s)^2 ds.
    const double dt = 1e-3;
    const double got = max_energy_residual(dt, 1.0);
    const double oracle = dt * (1.0 - std::exp(-2.0)) / 2.0;
    CHECK(got == doctest::Approx(oracle).epsilon(0.01));
    CHECK(got <= 2.0 * dt);
}

TEST_CASE("dt refinement halves the residual") {
    const double r1 = max_energy_residual(1e-2, 1.0);
    const double r2 = max_energy_residual(5e-3, 1.0);
    const double r3 = max_energy_residual(2.5e-3, 1.0);
    CHECK(r1 / r2 > 1.5);
    CHECK(r1 / r2 < 2.5);
    CHECK(r2 / r3 > 1.5);
    CHECK(r2 / r3 < 2.5);
    // measured convergence rate near first order
    const double rate = std::log2(r1 / r2);
    CHECK(rate > 0.7);
    CHECK(rate < 1.3);
}

TEST_CASE("conservative limit: nu = 0, zero noise, triad nonlinearity") {
    CovarianceSpectrum q({1.0, 1.0, 1.0});
    Model model{StokesSpectrum::weyl(3, 1.0),
                ConvectionTensor::builtin("triad", 3, 1.0),
                q,
                DiffusionFamily(DiffusionKind::LinearDiagonal, {{0.0, 0.0, 0.0}}, {}, q),
                std::nullopt,
                GeneratorMatrix::from_rates(1, {0.0}),
                1};
    auto cfg = quick_sim(0.0, 1e-3, 1.0);
    cfg.allow_zero_viscosity = true;
    cfg.initial.coeffs = {0.6, -0.5, 0.4};
    const auto path = integrate_path(cfg, model, 3, 0, true);
    const auto led = audit_energy(path, cfg);
    // |u(t)|^2 is conserved up to O(dt): b(u,u,u) = 0 kills the energy flux
    const double initial = path.initial_h_sq;
    CHECK(std::abs(h_norm_sq(path.terminal_u) - initial) < 1e-2);
    CHECK(led.max_abs_residual(1.0) < 1e-2);
}

TEST_CASE("per-jump identity holds to 1e-12 relative") {
    auto model = scalar_linear(1.0, 1.0, 0.5,
                               JumpKernel(3.0, {MarkDistribution::Kind::PlusMinus, 1.0, 0.0},
                                          JumpFamilyKind::LinearDiagonal, {{0.4}}, {}));
    auto cfg = quick_sim(1.0, 1e-2, 2.0);
    cfg.jumps_on = true;
    const auto path = integrate_path(cfg, model, 6, 0, true);
    REQUIRE(path.jump_records.size() > 2);
    for (const auto& rec : path.jump_records) {
        // |u + G|^2 from the updated vector vs 2(u,G) + |G|^2 expansion
        const double lhs = rec.u_sq_post - rec.u_sq_pre;
        const double rhs = 2.0 * rec.dot_ug + rec.g_sq;
        CHECK(std::abs(lhs - rhs) <= 1e-12 * (std::abs(lhs) + std::abs(rhs) + 1.0));
    }
}

TEST_CASE("unreduced and reduced compensator forms agree") {
    auto model = scalar_linear(1.0, 1.0, 0.3,
                               JumpKernel(2.0, {MarkDistribution::Kind::PlusMinus, 0.8, 0.0},
                                          JumpFamilyKind::LinearDiagonal, {{0.5}}, {}));
    auto cfg = quick_sim(1.0, 1e-2, 1.0);
    cfg.jumps_on = true;
    const auto path = integrate_path(cfg, model, 12, 0, true);
    const auto led = audit_energy(path, cfg);
    for (std::size_t i = 0; i < led.times.size(); ++i)
        CHECK(led.comp_unreduced[i] ==
              doctest::Approx(led.comp_drift[i]).epsilon(1e-12).scale(1.0));
}

TEST_CASE("stochastic columns equal the integrator accumulators exactly") {
    auto model = scalar_linear(1.0, 1.0, 0.7,
                               JumpKernel(1.5, {MarkDistribution::Kind::Fixed, 1.0, 0.0},
                                          JumpFamilyKind::LinearDiagonal, {{0.2}}, {}));
    auto cfg = quick_sim(1.0, 1e-2, 1.0);
    cfg.jumps_on = true;
    const auto path = integrate_path(cfg, model, 8, 0, true);
    const auto led = audit_energy(path, cfg);
    // at record times the audit columns must be the recorded M1/M2, bit for bit
    for (const auto& sample : path.samples) {
        for (std::size_t i = 0; i < led.times.size(); ++i) {
            if (led.times[i] == sample.t) {
                CHECK(led.wiener_int[i] == 2.0 * sample.m1);
                CHECK(led.jump_mart[i] == sample.m2);
            }
        }
    }
}

TEST_CASE("energy residual stays small for a noisy jump run") {
    auto model = scalar_linear(1.0, 1.0, 0.5,
                               JumpKernel(2.0, {MarkDistribution::Kind::PlusMinus, 1.0, 0.0},
                                          JumpFamilyKind::LinearDiagonal, {{0.3}}, {}));
    auto cfg = quick_sim(1.0, 1e-3, 1.0);
    cfg.jumps_on = true;
    const auto path = integrate_path(cfg, model, 21, 0, true);
    const auto led = audit_energy(path, cfg);
    CHECK(led.max_abs_residual(1.0) < 5e-2);
}

TEST_CASE("p-th moment audit: residual refines at first order") {
    auto run = [&](double dt) {
        auto model = scalar_linear(1.0, 1.0, 0.0);
        const auto cfg = quick_sim(1.0, dt, 1.0);
        const auto path = integrate_path(cfg, model, 5, 0, true);
        return audit_pth_moment(path, cfg, 3).max_abs_residual(1.0);
    };
    const double r1 = run(1e-2);
    const double r2 = run(5e-3);
    const double rate = std::log2(r1 / r2);
    CHECK(rate > 0.7);
    CHECK(rate < 1.3);
}

TEST_CASE("p-th moment audit with a single jump matches the direct power difference") {
    auto model = scalar_linear(1.0, 1.0, 0.0,
                               JumpKernel(0.4, {MarkDistribution::Kind::Fixed, 1.0, 0.0},
                                          JumpFamilyKind::LinearDiagonal, {{0.5}}, {}));
    auto cfg = quick_sim(1.0, 1e-2, 1.0);
    cfg.jumps_on = true;
    // hunt a seed with exactly one jump (deterministic once found)
    std::uint64_t seed = 0;
    HybridPath path;
    for (; seed < 50; ++seed) {
        path = integrate_path(cfg, model, seed, 0, true);
        if (path.jump_records.size() == 1) break;
    }
    REQUIRE(path.jump_records.size() == 1);
    const auto& rec = path.jump_records.front();
    const double direct =
        std::pow(rec.u_sq_post, 1.5) - std::pow(rec.u_sq_pre, 1.5);
    const double expanded = std::pow(rec.post_sq(), 1.5) - std::pow(rec.u_sq_pre, 1.5);
    CHECK(direct == doctest::Approx(expanded).epsilon(1e-12));
    CHECK_NOTHROW((void)audit_pth_moment(path, cfg, 3));
}

TEST_CASE("p = 2 is rejected and routed to audit_energy") {
    auto model = scalar_linear(1.0, 1.0, 0.1);
    const auto cfg = quick_sim(1.0, 1e-2, 0.2);
    const auto path = integrate_path(cfg, model, 1, 0, true);
    CHECK_THROWS_AS((void)audit_pth_moment(path, cfg, 2), AuditError);
    CHECK_NOTHROW((void)audit_energy(path, cfg));
}

TEST_CASE("missing ledger raises an audit error") {
    auto model = scalar_linear(1.0, 1.0, 0.1);
    const auto cfg = quick_sim(1.0, 1e-2, 0.2);
    const auto path = integrate_path(cfg, model, 1, 0, false);
    CHECK_THROWS_AS((void)audit_energy(path, cfg), AuditError);
}

TEST_CASE("p >= 3 jump audit needs a discrete mark law") {
    auto model = scalar_linear(1.0, 1.0, 0.0,
                               JumpKernel(2.0, {MarkDistribution::Kind::Uniform, -1.0, 1.0},
                                          JumpFamilyKind::LinearDiagonal, {{0.3}}, {}));
    auto cfg = quick_sim(1.0, 1e-2, 1.0);
    cfg.jumps_on = true;
    const auto path = integrate_path(cfg, model, 9, 0, true);
    CHECK_THROWS_AS((void)audit_pth_moment(path, cfg, 3), AuditError);
    CHECK_NOTHROW((void)audit_energy(path, cfg));   // p = 2 has closed forms
}

TEST_CASE("martingale diagnostics: zero noise is identically flat") {
    auto model = scalar_linear(1.0, 1.0, 0.0);
    const auto cfg = quick_sim(1.0, 1e-2, 2.0, 10);
    const auto summary = ensemble(cfg, model, 8, 4, {2});
    const auto rep = martingale_diagnostics(summary);
    CHECK(rep.sup_mean_abs_m1 == 0.0);
    CHECK(rep.sup_mean_abs_m2 == 0.0);
    CHECK(rep.m1_flat);
    CHECK(rep.m2_flat);
}

TEST_CASE("martingale diagnostics: integrable profile freezes, constant profile grows") {
    // Additive noise keeps injecting quadratic variation at a constant rate,
    // so |M1| drifts like sqrt(t) unless K(t) is integrable.
    auto additive = [](TimeProfile profile) {
        CovarianceSpectrum q({1.0});
        return Model{StokesSpectrum({1.0}),
                     ConvectionTensor::builtin("zero", 1),
                     q,
                     DiffusionFamily(DiffusionKind::Additive, {{1.0}}, profile, q),
                     std::nullopt,
                     GeneratorMatrix::from_rates(1, {0.0}),
                     1};
    };

    // H'-style exponentially decaying K(t): M1 converges, tail flat.
    const auto flat_model = additive(TimeProfile{TimeProfile::Kind::ExpDecay, 0.5});
    const auto cfg = quick_sim(1.0, 2e-3, 10.0, 50);
    const auto flat_summary = ensemble(cfg, flat_model, 400, 6006, {2});
    const auto flat_rep = martingale_diagnostics(flat_summary);
    CHECK(flat_rep.m1_flat);

    // Same K at t = 0 but non-integrable (constant) profile: E|M1| grows.
    const auto growing_model = additive(TimeProfile{});
    const auto grow_cfg = quick_sim(1.0, 2e-3, 3.0, 10);
    const auto grow_summary = ensemble(grow_cfg, growing_model, 1500, 6007, {2});
    const auto grow_rep = martingale_diagnostics(grow_summary);
    CHECK_FALSE(grow_rep.m1_flat);
    CHECK(grow_rep.m1_tail_trend.slope > 0.0);
}

} // TEST_SUITE
