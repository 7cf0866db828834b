#pragma once

#include "snse/hybrid_integrator.hpp"
#include "snse/noise_engine.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace snse {

struct AnalysisConfig {
    std::vector<int> p_list{2};
    std::size_t paths = 1000;
    std::optional<double> burn_in;        // default 5 / (nu lambda1)
    std::optional<double> window_lo;      // default burn-in
    std::optional<double> window_hi;      // default horizon
    int p_max = 4;
    std::size_t hypothesis_samples = 1000;
    HypothesisMode hypothesis_mode = HypothesisMode::Constant;
    std::vector<double> sweep_k;

    double effective_burn_in(double nu, double lambda1) const;
};

/// One declarative document describing a full run: dynamics, noise, chain,
/// and analysis choices. Schema-checked on parse (unknown keys rejected)
/// and echoed verbatim into every output for provenance.
struct RunConfig {
    int schema_version = 1;
    std::uint64_t seed = 0;

    // sim
    double nu = 1.0;
    double dt = 1e-3;
    double horizon = 1.0;
    Scheme scheme = Scheme::EulerMaruyama;
    bool jumps_on = false;
    double blowup_guard = 1e12;
    std::size_t record_every = 1;
    InitialCondition initial;

    // spectrum
    std::size_t modes = 1;
    std::string spectrum_shape = "weyl";   // or "explicit"
    double lambda1 = 1.0;
    std::vector<double> spectrum_values;

    // tensor
    std::string tensor_name = "zero";
    double tensor_amplitude = 1.0;

    // chain
    int states = 1;
    std::vector<double> rates;   // m x m row-major, diagonal ignored
    Regime initial_state = 1;

    // noise
    std::vector<double> q;
    DiffusionKind diffusion_kind = DiffusionKind::LinearDiagonal;
    std::vector<std::vector<double>> diffusion_amplitudes;
    TimeProfile diffusion_profile;
    double jump_intensity = 0.0;
    JumpFamilyKind jump_kind = JumpFamilyKind::LinearDiagonal;
    std::vector<std::vector<double>> jump_amplitudes;
    MarkDistribution jump_marks;
    TimeProfile jump_profile;
    bool has_jump_section = false;

    AnalysisConfig analysis;

    std::string echo;   // raw document text
    std::string hash;   // FNV-1a of the raw text, 16 hex digits

    static RunConfig parse_text(const std::string& text);
    static RunConfig parse_file(const std::string& path);

    /// Semantically equivalent JSON, for round-trip checks and reports.
    std::string to_json_text() const;

    SimConfig build_sim() const;
    Model build_model() const;

    double window_lo() const;
    double window_hi() const;
};

std::string fnv1a_hex(const std::string& text);

} // namespace snse
