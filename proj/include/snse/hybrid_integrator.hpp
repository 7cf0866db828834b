#pragma once

#include "snse/noise_engine.hpp"
#include "snse/regime_chain.hpp"
#include "snse/spectral_space.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace snse {

enum class Scheme { EulerMaruyama, TamedEuler };

struct InitialCondition {
    enum class Kind { Deterministic, Gaussian };
    Kind kind = Kind::Deterministic;
    std::vector<double> coeffs;     // Deterministic: the value (defaults to e_1)
    std::vector<double> std_devs;   // Gaussian: per-mode standard deviations

    SpectralField sample(std::size_t modes, Rng& rng) const;
};

struct SimConfig {
    double nu = 1.0;
    double dt = 1e-3;
    double horizon = 1.0;
    Scheme scheme = Scheme::EulerMaruyama;
    bool jumps_on = false;
    double blowup_guard = 1e12;
    std::size_t record_every = 1;
    InitialCondition initial;
    // Audit-only escape hatch: the conservative nu = 0 limit is allowed when
    // checking the energy identity, never for production runs.
    bool allow_zero_viscosity = false;

    void validate(const StokesSpectrum& spectrum) const;
};

/// Everything that defines the switched dynamics, independent of the run.
struct Model {
    StokesSpectrum spectrum;
    ConvectionTensor tensor;
    CovarianceSpectrum q;
    DiffusionFamily diffusion;
    std::optional<JumpKernel> jumps;
    GeneratorMatrix generator;
    Regime initial_regime = 1;

    void validate() const;
};

/// Negative of the deterministic bracket: -nu A u - B(u, u).
SpectralField drift(std::span<const double> u, double nu, const ConvectionTensor& tensor,
                    const StokesSpectrum& spectrum);

struct HybridState {
    double t = 0.0;
    SpectralField u;
    Regime regime = 1;
};

/// One quadrature cell of the integrator: a maximal sub-interval on which
/// the regime is constant. All integrands are evaluated at the left
/// endpoint, matching the Euler scheme.
struct LedgerRow {
    double t = 0.0;        // left endpoint
    double h = 0.0;        // length
    Regime regime = 1;
    double u_h_sq = 0.0;   // |u|^2 at left endpoint
    double u_v_sq = 0.0;   // ||u||^2
    double hs_sq = 0.0;    // ||sigma||_LQ^2
    double wiener_dot = 0.0;   // (u, sigma dW) over this cell
    double comp_sq = 0.0;      // int |G|^2 nu1(dz)
    double comp_dot = 0.0;     // (u, int G nu1(dz))
    double m1_after = 0.0;     // M1 accumulator at the cell's right boundary
    double m2_after = 0.0;     // M2 accumulator at the cell's right boundary
    // Per-atom scalars of the mark law, for higher-moment compensators.
    int n_atoms = 0;
    std::array<double, 2> atom_weight{};   // nu1 mass of the atom
    std::array<double, 2> atom_dot{};      // (u, G_atom)
    std::array<double, 2> atom_gsq{};      // |G_atom|^2
};

struct JumpRecord {
    double t = 0.0;
    Regime regime = 1;
    double mark = 0.0;
    double u_sq_pre = 0.0;    // |u(t-)|^2
    double dot_ug = 0.0;      // (u(t-), G)
    double g_sq = 0.0;        // |G|^2
    double u_sq_post = 0.0;   // |u(t-) + G|^2, summed from the updated vector
    double post_sq() const { return u_sq_pre + 2.0 * dot_ug + g_sq; }
};

struct SamplePoint {
    double t = 0.0;
    double h_norm = 0.0;
    double v_norm = 0.0;
    Regime regime = 1;
    double m1 = 0.0;   // Wiener martingale accumulator
    double m2 = 0.0;   // compensated jump accumulator
};

struct HybridPath {
    std::vector<SamplePoint> samples;     // at record times, starting at t = 0
    std::vector<LedgerRow> ledger;        // per sub-step, when enabled
    std::vector<JumpRecord> jump_records;
    SpectralField terminal_u;
    double terminal_time = 0.0;
    Regime terminal_regime = 1;
    double initial_h_sq = 0.0;            // |x|^2
    double m1 = 0.0, m2 = 0.0;
    bool blowup = false;
    double blowup_time = 0.0;
    bool ledger_enabled = false;
};

/// Integrate one path against a pre-simulated chain trajectory.
HybridPath integrate_path(const SimConfig& cfg, const Model& model, const ChainPath& chain,
                          std::uint64_t master_seed, std::uint64_t path_index,
                          bool with_ledger);

/// Convenience overload: simulates the chain over the horizon first
/// (Poisson-measure representation), then integrates.
HybridPath integrate_path(const SimConfig& cfg, const Model& model, std::uint64_t master_seed,
                          std::uint64_t path_index = 0, bool with_ledger = false);

struct EnsembleSummary {
    std::vector<double> times;    // record times
    std::vector<int> p_list;
    // Indexed [p][time].
    std::vector<std::vector<double>> moment_mean;
    std::vector<std::vector<double>> moment_se;
    // Covariance between consecutive record times, for increment-weighted
    // exponent fits; indexed [p][time], one shorter than `times`.
    std::vector<std::vector<double>> moment_cov_adj;
    std::vector<double> m1_mean, m1_se, m1_abs_mean, m1_abs_se;
    std::vector<double> m2_mean, m2_se, m2_abs_mean, m2_abs_se;
    std::vector<double> pathwise_lambda;   // log|u(T)| / T per surviving path
    std::size_t n_paths = 0;
    std::size_t blowup_count = 0;
    bool unreliable = false;

    std::size_t n_used() const { return n_paths - blowup_count; }
    std::size_t time_index(double t) const;   // nearest record index
};

/// Monte Carlo ensemble with per-path seeds derived by counter from the
/// master seed; deterministic and order-independent in the outputs.
EnsembleSummary ensemble(const SimConfig& cfg, const Model& model, std::size_t n_paths,
                         std::uint64_t master_seed, const std::vector<int>& p_list);

} // namespace snse
