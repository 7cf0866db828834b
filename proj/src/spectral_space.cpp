#include "snse/spectral_space.hpp"

#include "snse/errors.hpp"

#include <cmath>

namespace snse {

StokesSpectrum::StokesSpectrum(std::vector<double> lambdas) : lambdas_(std::move(lambdas)) {
    if (lambdas_.empty()) throw ConfigError("spectrum: needs at least one mode");
    double prev = 0.0;
    for (double lam : lambdas_) {
        if (!(lam > 0.0) || !std::isfinite(lam))
            throw ConfigError("spectrum: eigenvalues must be positive and finite");
        if (lam < prev) throw ConfigError("spectrum: eigenvalues must be nondecreasing");
        prev = lam;
    }
}

StokesSpectrum StokesSpectrum::weyl(std::size_t n_modes, double lambda1) {
    if (n_modes == 0) throw ConfigError("spectrum: mode count must be positive");
    if (!(lambda1 > 0.0)) throw ConfigError("spectrum: lambda1 must be positive");
    std::vector<double> lams(n_modes);
    for (std::size_t k = 0; k < n_modes; ++k)
        lams[k] = lambda1 * std::pow(static_cast<double>(k + 1), 2.0 / 3.0);
    lams[0] = lambda1;
    return StokesSpectrum(std::move(lams));
}

double h_norm_sq(std::span<const double> u) {
    double s = 0.0;
    for (double x : u) s += x * x;
    return s;
}

double h_norm(std::span<const double> u) { return std::sqrt(h_norm_sq(u)); }

double v_norm_sq(std::span<const double> u, const StokesSpectrum& spec) {
    if (u.size() != spec.modes()) throw ConfigError("v_norm: dimension mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) s += spec.lambda(k) * u[k] * u[k];
    return s;
}

double v_norm(std::span<const double> u, const StokesSpectrum& spec) {
    return std::sqrt(v_norm_sq(u, spec));
}

SpectralField apply_stokes(std::span<const double> u, const StokesSpectrum& spec) {
    if (u.size() != spec.modes()) throw ConfigError("apply_stokes: dimension mismatch");
    SpectralField out(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) out[k] = spec.lambda(k) * u[k];
    return out;
}

void ConvectionTensor::add_antisymmetric(std::size_t i, std::size_t j, std::size_t k, double c) {
    if (j == k) throw ConfigError("convection tensor: antisymmetric triple needs j != k");
    triples_.push_back({i, j, k, c});
    max_index_ = std::max(max_index_, std::max(i, std::max(j, k)));
}

ConvectionTensor ConvectionTensor::builtin(const std::string& name, std::size_t n_modes,
                                           double amplitude) {
    ConvectionTensor tensor;
    if (name == "zero") return tensor;
    if (name == "triad") {
        if (n_modes < 3) throw ConfigError("tensor 'triad' needs at least 3 modes");
        tensor.add_antisymmetric(0, 1, 2, amplitude);
        return tensor;
    }
    if (name == "shell-like") {
        if (n_modes < 3) throw ConfigError("tensor 'shell-like' needs at least 3 modes");
        for (std::size_t k = 1; k + 1 < n_modes; ++k)
            tensor.add_antisymmetric(k - 1, k, k + 1, amplitude);
        return tensor;
    }
    throw ConfigError("unknown convection tensor '" + name + "'");
}

double ConvectionTensor::b_form(std::span<const double> u, std::span<const double> v,
                                std::span<const double> w) const {
    if (!triples_.empty() && (max_index_ >= u.size() || u.size() != v.size() || v.size() != w.size()))
        throw ConfigError("b_form: dimension mismatch");
    double s = 0.0;
    for (const auto& t : triples_)
        s += t.c * u[t.i] * (v[t.j] * w[t.k] - v[t.k] * w[t.j]);
    return s;
}

SpectralField ConvectionTensor::apply(std::span<const double> u, std::span<const double> v) const {
    if (u.size() != v.size()) throw ConfigError("apply_convection: dimension mismatch");
    if (!triples_.empty() && max_index_ >= u.size())
        throw ConfigError("apply_convection: dimension mismatch");
    SpectralField out(u.size(), 0.0);
    for (const auto& t : triples_) {
        out[t.k] += t.c * u[t.i] * v[t.j];
        out[t.j] -= t.c * u[t.i] * v[t.k];
    }
    return out;
}

} // namespace snse
