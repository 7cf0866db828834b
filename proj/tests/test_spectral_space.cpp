#include "snse/spectral_space.hpp"

#include "snse/errors.hpp"
#include "snse/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace snse;

namespace {

SpectralField random_field(std::size_t n, Rng& rng, double scale = 1.0) {
    SpectralField u(n);
    for (auto& x : u) x = scale * rng.normal();
    return u;
}

// Direct-summation oracle for the V-inner product, independent of apply_stokes.
double v_inner_oracle(const SpectralField& u, const StokesSpectrum& spec) {
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) s += spec.lambda(k) * u[k] * u[k];
    return s;
}

} // namespace

TEST_SUITE("spectral_space") {

TEST_CASE("single-mode norms") {
    const StokesSpectrum spec({2.0, 3.0});
    const SpectralField u{1.0, 0.0};
    CHECK(h_norm(u) == doctest::Approx(1.0));
    CHECK(v_norm(u, spec) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("zero field has zero norms") {
    const StokesSpectrum spec({1.0, 1.5, 2.0});
    const SpectralField u(3, 0.0);
    CHECK(h_norm(u) == 0.0);
    CHECK(v_norm(u, spec) == 0.0);
}

TEST_CASE("Poincare inequality on random fields") {
    const auto spec = StokesSpectrum::weyl(16, 0.7);
    Rng rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto u = random_field(16, rng, std::pow(10.0, rng.uniform(-2.0, 2.0)));
        const double lhs = spec.lambda1() * h_norm_sq(u);
        const double rhs = v_norm_sq(u, spec);
        CHECK(lhs <= rhs * (1.0 + 1e-12));
    }
}

TEST_CASE("Poincare equality iff supported on the lowest eigenvalue") {
    const StokesSpectrum spec({1.0, 1.0, 4.0});
    SpectralField u{0.3, -0.8, 0.0};   // support only where lambda = lambda1
    CHECK(spec.lambda1() * h_norm_sq(u) == doctest::Approx(v_norm_sq(u, spec)).epsilon(1e-15));
    u[2] = 0.1;
    CHECK(spec.lambda1() * h_norm_sq(u) < v_norm_sq(u, spec));
}

TEST_CASE("Stokes operator acts diagonally") {
    const StokesSpectrum spec({2.0, 5.0});
    const SpectralField u{1.0, 0.0};
    const auto au = apply_stokes(u, spec);
    CHECK(au[0] == doctest::Approx(2.0));
    CHECK(au[1] == doctest::Approx(0.0));
}

TEST_CASE("(Au, u) equals the squared V-norm") {
    const auto spec = StokesSpectrum::weyl(12, 1.3);
    Rng rng(22);
    for (int trial = 0; trial < 200; ++trial) {
        const auto u = random_field(12, rng);
        const auto au = apply_stokes(u, spec);
        double dot = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) dot += au[k] * u[k];
        const double oracle = v_inner_oracle(u, spec);
        CHECK(dot == doctest::Approx(oracle).epsilon(1e-12));
        CHECK(dot == doctest::Approx(v_norm_sq(u, spec)).epsilon(1e-12));
    }
}

TEST_CASE("Stokes operator is linear") {
    const auto spec = StokesSpectrum::weyl(8, 1.0);
    Rng rng(33);
    const auto u = random_field(8, rng);
    SpectralField scaled = u;
    for (auto& x : scaled) x *= 2.5;
    const auto a_scaled = apply_stokes(scaled, spec);
    const auto au = apply_stokes(u, spec);
    for (std::size_t k = 0; k < u.size(); ++k)
        CHECK(a_scaled[k] == doctest::Approx(2.5 * au[k]).epsilon(1e-14));
}

TEST_CASE("norm dimension mismatch is a configuration error") {
    const StokesSpectrum spec({1.0, 2.0});
    const SpectralField u{1.0, 2.0, 3.0};
    CHECK_THROWS_AS((void)v_norm(u, spec), ConfigError);
    CHECK_THROWS_AS((void)apply_stokes(u, spec), ConfigError);
}

TEST_CASE("b form with a single structure constant") {
    ConvectionTensor tensor;
    tensor.add_antisymmetric(0, 1, 2, 1.0);
    const SpectralField e1{1.0, 0.0, 0.0}, e2{0.0, 1.0, 0.0}, e3{0.0, 0.0, 1.0};
    CHECK(tensor.b_form(e1, e2, e3) == doctest::Approx(1.0));
    CHECK(tensor.b_form(e1, e3, e2) == doctest::Approx(-1.0));
}

TEST_CASE("b(u, v, v) vanishes exactly") {
    ConvectionTensor tensor;
    tensor.add_antisymmetric(0, 1, 2, 1.0);
    Rng rng(44);
    for (int trial = 0; trial < 100; ++trial) {
        const auto u = random_field(3, rng);
        const auto v = random_field(3, rng);
        CHECK(tensor.b_form(u, v, v) == 0.0);   // pairwise evaluation is exact
    }
}

TEST_CASE("antisymmetry of b in the last two arguments") {
    const auto tensor = ConvectionTensor::builtin("shell-like", 10, 0.8);
    Rng rng(55);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto u = random_field(10, rng);
        const auto v = random_field(10, rng);
        const auto w = random_field(10, rng);
        const double fwd = tensor.b_form(u, v, w);
        const double rev = tensor.b_form(u, w, v);
        CHECK(fwd == doctest::Approx(-rev).epsilon(1e-12));
    }
}

TEST_CASE("apply_convection realizes the bilinear-form identity") {
    const auto tensor = ConvectionTensor::builtin("shell-like", 8, 1.0);
    Rng rng(66);
    for (int trial = 0; trial < 200; ++trial) {
        const auto u = random_field(8, rng);
        const auto v = random_field(8, rng);
        const auto w = random_field(8, rng);
        const auto buv = tensor.apply(u, v);
        double contraction = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) contraction += buv[k] * w[k];
        CHECK(contraction == doctest::Approx(tensor.b_form(u, v, w)).epsilon(1e-12));
    }
}

TEST_CASE("apply_convection is bilinear") {
    const auto tensor = ConvectionTensor::builtin("shell-like", 8, 1.0);
    Rng rng(77);
    const auto u = random_field(8, rng);
    const auto u2 = random_field(8, rng);
    const auto v = random_field(8, rng);
    const double alpha = 0.6, beta = -1.7;
    SpectralField combo(8);
    for (std::size_t k = 0; k < 8; ++k) combo[k] = alpha * u[k] + beta * u2[k];
    const auto lhs = tensor.apply(combo, v);
    const auto b1 = tensor.apply(u, v);
    const auto b2 = tensor.apply(u2, v);
    for (std::size_t k = 0; k < 8; ++k)
        CHECK(lhs[k] == doctest::Approx(alpha * b1[k] + beta * b2[k]).epsilon(1e-12));
}

TEST_CASE("builtin zero tensor gives no nonlinearity") {
    const auto tensor = ConvectionTensor::builtin("zero", 4);
    Rng rng(88);
    const auto u = random_field(4, rng);
    const auto buu = tensor.apply(u, u);
    for (double x : buu) CHECK(x == 0.0);
}

TEST_CASE("triad conserves energy") {
    const auto tensor = ConvectionTensor::builtin("triad", 3, 2.0);
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const auto u = random_field(3, rng);
        CHECK(tensor.b_form(u, u, u) == 0.0);
        const auto buu = tensor.apply(u, u);
        double energy = 0.0;
        for (std::size_t k = 0; k < 3; ++k) energy += buu[k] * u[k];
        const double cube = h_norm(u) * h_norm(u) * h_norm(u);
        CHECK(std::abs(energy) <= 1e-12 * (1.0 + cube));
    }
}

TEST_CASE("shell-like tensor antisymmetry by exhaustive enumeration") {
    const std::size_t n = 8;
    const auto tensor = ConvectionTensor::builtin("shell-like", n, 1.0);
    std::vector<SpectralField> basis(n, SpectralField(n, 0.0));
    for (std::size_t k = 0; k < n; ++k) basis[k][k] = 1.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) {
                const double fwd = tensor.b_form(basis[i], basis[j], basis[k]);
                const double rev = tensor.b_form(basis[i], basis[k], basis[j]);
                CHECK(fwd == -rev);
            }
}

TEST_CASE("unknown tensor name and bad spectra are rejected") {
    CHECK_THROWS_AS((void)ConvectionTensor::builtin("vortex", 8), ConfigError);
    CHECK_THROWS_AS((void)ConvectionTensor::builtin("triad", 2), ConfigError);
    CHECK_THROWS_AS(StokesSpectrum({1.0, 0.5}), ConfigError);    // decreasing
    CHECK_THROWS_AS(StokesSpectrum({0.0, 1.0}), ConfigError);    // not positive
    CHECK_THROWS_AS(StokesSpectrum({}), ConfigError);
}

TEST_CASE("weyl spectrum shape") {
    const auto spec = StokesSpectrum::weyl(4, 2.0);
    CHECK(spec.lambda1() == doctest::Approx(2.0));
    CHECK(spec.lambda(3) == doctest::Approx(2.0 * std::pow(4.0, 2.0 / 3.0)));
    CHECK(spec.lambda_max() >= spec.lambda1());
}

} // TEST_SUITE
