#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace snse {

/// Velocity field as Galerkin coefficients on the Stokes eigenbasis.
using SpectralField = std::vector<double>;

/// Diagonal surrogate of the Stokes operator: strictly positive,
/// nondecreasing eigenvalues. lambda1() enters every stability threshold.
class StokesSpectrum {
public:
    explicit StokesSpectrum(std::vector<double> lambdas);

    /// Weyl-like 3D growth lambda_k = lambda1 * k^(2/3).
    static StokesSpectrum weyl(std::size_t n_modes, double lambda1);

    std::size_t modes() const { return lambdas_.size(); }
    double lambda(std::size_t k) const { return lambdas_[k]; }
    double lambda1() const { return lambdas_.front(); }
    double lambda_max() const { return lambdas_.back(); }
    const std::vector<double>& eigenvalues() const { return lambdas_; }

private:
    std::vector<double> lambdas_;
};

double h_norm_sq(std::span<const double> u);
double h_norm(std::span<const double> u);
double v_norm_sq(std::span<const double> u, const StokesSpectrum& spec);
double v_norm(std::span<const double> u, const StokesSpectrum& spec);

/// (A u)_k = lambda_k u_k, so (Au, u) = ||u||^2 holds by construction.
SpectralField apply_stokes(std::span<const double> u, const StokesSpectrum& spec);

/// Convection surrogate b(u,v,w) = sum c_ijk u_i v_j w_k built from
/// structure constants stored antisymmetrically in the last two slots.
/// Evaluation pairs each stored triple with its mirror, so b(u,v,v) is an
/// exact floating-point zero and b(u,v,w) = -b(u,w,v) identically.
class ConvectionTensor {
public:
    struct Triple {
        std::size_t i, j, k;
        double c;
    };

    ConvectionTensor() = default;

    /// Stores c_ijk = c and implicitly c_ikj = -c. Requires j != k.
    void add_antisymmetric(std::size_t i, std::size_t j, std::size_t k, double c);

    static ConvectionTensor builtin(const std::string& name, std::size_t n_modes,
                                    double amplitude = 1.0);

    double b_form(std::span<const double> u, std::span<const double> v,
                  std::span<const double> w) const;

    /// B(u,v) with <B(u,v), w> = b(u,v,w) for all w.
    SpectralField apply(std::span<const double> u, std::span<const double> v) const;

    const std::vector<Triple>& triples() const { return triples_; }
    bool empty() const { return triples_.empty(); }
    std::size_t max_index() const { return max_index_; }

private:
    std::vector<Triple> triples_;   // one entry per antisymmetric pair
    std::size_t max_index_ = 0;
};

} // namespace snse
