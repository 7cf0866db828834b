#include "snse/run_config.hpp"

#include "snse/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace snse {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& context,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(context + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!ok.count(key)) throw ConfigError(context + ": unknown key '" + key + "'");
    }
}

double get_number(const json& j, const std::string& context, const char* key) {
    if (!j.contains(key)) throw ConfigError(context + ": missing '" + std::string(key) + "'");
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(context + ": '" + key + "' must be a number");
    return v.get<double>();
}

double get_number_or(const json& j, const std::string& context, const char* key,
                     double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(context + ": '" + key + "' must be a number");
    return v.get<double>();
}

long long get_integer(const json& j, const std::string& context, const char* key) {
    if (!j.contains(key)) throw ConfigError(context + ": missing '" + std::string(key) + "'");
    const auto& v = j.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned())
        throw ConfigError(context + ": '" + key + "' must be an integer");
    return v.get<long long>();
}

std::string get_string(const json& j, const std::string& context, const char* key) {
    if (!j.contains(key)) throw ConfigError(context + ": missing '" + std::string(key) + "'");
    const auto& v = j.at(key);
    if (!v.is_string()) throw ConfigError(context + ": '" + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<double> number_list(const json& v, const std::string& context) {
    if (!v.is_array()) throw ConfigError(context + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError(context + ": expected numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

/// An amplitudes entry is one row per regime; each row is a scalar
/// (broadcast over modes) or an array of length `modes`. A single row is
/// broadcast over all regimes.
std::vector<std::vector<double>> parse_amplitudes(const json& v, const std::string& context,
                                                  std::size_t modes, int states) {
    if (!v.is_array() || v.empty())
        throw ConfigError(context + ": 'amplitudes' must be a nonempty array (one per regime)");
    std::vector<std::vector<double>> rows;
    for (const auto& entry : v) {
        if (entry.is_number()) {
            rows.emplace_back(modes, entry.get<double>());
        } else if (entry.is_array()) {
            auto row = number_list(entry, context + ".amplitudes");
            if (row.size() != modes)
                throw ConfigError(context + ": amplitude row length must equal mode count");
            rows.push_back(std::move(row));
        } else {
            throw ConfigError(context + ": amplitude rows must be numbers or arrays");
        }
    }
    if (rows.size() == 1 && states > 1) rows.assign(static_cast<std::size_t>(states), rows[0]);
    if (rows.size() != static_cast<std::size_t>(states))
        throw ConfigError(context + ": need one amplitude row per regime");
    return rows;
}

TimeProfile parse_profile(const json& j, const std::string& context) {
    TimeProfile profile;
    if (j.is_null()) return profile;
    check_keys(j, context, {"kind", "beta"});
    const std::string kind = get_string(j, context, "kind");
    if (kind == "constant") {
        profile.kind = TimeProfile::Kind::Constant;
    } else if (kind == "exp-decay") {
        profile.kind = TimeProfile::Kind::ExpDecay;
        profile.beta = get_number(j, context, "beta");
        if (!(profile.beta > 0.0)) throw ConfigError(context + ": 'beta' must be positive");
    } else {
        throw ConfigError(context + ": unknown profile kind '" + kind + "'");
    }
    return profile;
}

json profile_json(const TimeProfile& p) {
    json j;
    j["kind"] = p.name();
    if (p.kind == TimeProfile::Kind::ExpDecay) j["beta"] = p.beta;
    return j;
}

} // namespace

double AnalysisConfig::effective_burn_in(double nu, double lambda1) const {
    return burn_in.value_or(5.0 / (nu * lambda1));
}

RunConfig RunConfig::parse_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }

    RunConfig cfg;
    cfg.echo = text;
    cfg.hash = fnv1a_hex(text);

    check_keys(doc, "config",
               {"schema_version", "seed", "sim", "spectrum", "tensor", "chain", "noise",
                "analysis"});

    cfg.schema_version = static_cast<int>(get_integer(doc, "config", "schema_version"));
    if (cfg.schema_version != 1) throw ConfigError("config: unsupported schema_version");
    const long long seed = get_integer(doc, "config", "seed");
    if (seed < 0) throw ConfigError("config: 'seed' must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(seed);

    // --- sim ---
    if (!doc.contains("sim")) throw ConfigError("config: missing 'sim'");
    const json& sim = doc.at("sim");
    check_keys(sim, "sim",
               {"nu", "dt", "horizon", "scheme", "jumps", "blowup_guard", "record_every",
                "initial"});
    cfg.nu = get_number(sim, "sim", "nu");
    cfg.dt = get_number(sim, "sim", "dt");
    cfg.horizon = get_number(sim, "sim", "horizon");
    const std::string scheme = sim.contains("scheme") ? get_string(sim, "sim", "scheme")
                                                      : std::string("euler-maruyama");
    if (scheme == "euler-maruyama")
        cfg.scheme = Scheme::EulerMaruyama;
    else if (scheme == "tamed-euler")
        cfg.scheme = Scheme::TamedEuler;
    else
        throw ConfigError("sim: unknown scheme '" + scheme + "'");
    if (sim.contains("jumps")) {
        if (!sim.at("jumps").is_boolean()) throw ConfigError("sim: 'jumps' must be a boolean");
        cfg.jumps_on = sim.at("jumps").get<bool>();
    }
    cfg.blowup_guard = get_number_or(sim, "sim", "blowup_guard", 1e12);
    if (sim.contains("record_every")) {
        const long long re = get_integer(sim, "sim", "record_every");
        if (re < 1) throw ConfigError("sim: 'record_every' must be >= 1");
        cfg.record_every = static_cast<std::size_t>(re);
    }
    if (sim.contains("initial")) {
        const json& init = sim.at("initial");
        check_keys(init, "sim.initial", {"kind", "coeffs", "std"});
        const std::string kind = get_string(init, "sim.initial", "kind");
        if (kind == "deterministic") {
            cfg.initial.kind = InitialCondition::Kind::Deterministic;
            if (init.contains("coeffs"))
                cfg.initial.coeffs = number_list(init.at("coeffs"), "sim.initial.coeffs");
        } else if (kind == "gaussian") {
            cfg.initial.kind = InitialCondition::Kind::Gaussian;
            if (!init.contains("std"))
                throw ConfigError("sim.initial: gaussian needs 'std'");
            if (init.at("std").is_number())
                cfg.initial.std_devs = {init.at("std").get<double>()};
            else
                cfg.initial.std_devs = number_list(init.at("std"), "sim.initial.std");
        } else {
            throw ConfigError("sim.initial: unknown kind '" + kind + "'");
        }
    }

    // --- spectrum ---
    if (!doc.contains("spectrum")) throw ConfigError("config: missing 'spectrum'");
    const json& spec = doc.at("spectrum");
    check_keys(spec, "spectrum", {"modes", "lambda1", "shape", "values"});
    const long long modes = get_integer(spec, "spectrum", "modes");
    if (modes < 1 || modes > 1024)
        throw ConfigError("spectrum: 'modes' must be in 1..1024");
    cfg.modes = static_cast<std::size_t>(modes);
    cfg.spectrum_shape =
        spec.contains("shape") ? get_string(spec, "spectrum", "shape") : std::string("weyl");
    if (cfg.spectrum_shape == "weyl") {
        cfg.lambda1 = get_number(spec, "spectrum", "lambda1");
    } else if (cfg.spectrum_shape == "explicit") {
        cfg.spectrum_values = number_list(spec.at("values"), "spectrum.values");
        if (cfg.spectrum_values.size() != cfg.modes)
            throw ConfigError("spectrum: 'values' length must equal 'modes'");
        cfg.lambda1 = cfg.spectrum_values.front();
    } else {
        throw ConfigError("spectrum: unknown shape '" + cfg.spectrum_shape + "'");
    }

    // --- tensor ---
    if (doc.contains("tensor")) {
        const json& tensor = doc.at("tensor");
        check_keys(tensor, "tensor", {"name", "amplitude"});
        cfg.tensor_name = get_string(tensor, "tensor", "name");
        cfg.tensor_amplitude = get_number_or(tensor, "tensor", "amplitude", 1.0);
    }

    // --- chain ---
    if (!doc.contains("chain")) throw ConfigError("config: missing 'chain'");
    const json& chain = doc.at("chain");
    check_keys(chain, "chain", {"states", "rates", "initial_state"});
    const long long states = get_integer(chain, "chain", "states");
    if (states < 1) throw ConfigError("chain: 'states' must be >= 1");
    cfg.states = static_cast<int>(states);
    if (!chain.contains("rates") || !chain.at("rates").is_array())
        throw ConfigError("chain: 'rates' must be an m x m array");
    for (const auto& row : chain.at("rates")) {
        const auto r = number_list(row, "chain.rates");
        if (r.size() != static_cast<std::size_t>(cfg.states))
            throw ConfigError("chain: 'rates' must be an m x m array");
        cfg.rates.insert(cfg.rates.end(), r.begin(), r.end());
    }
    if (chain.at("rates").size() != static_cast<std::size_t>(cfg.states))
        throw ConfigError("chain: 'rates' must be an m x m array");
    cfg.initial_state = static_cast<Regime>(get_integer(chain, "chain", "initial_state"));

    // --- noise ---
    if (!doc.contains("noise")) throw ConfigError("config: missing 'noise'");
    const json& noise = doc.at("noise");
    check_keys(noise, "noise", {"q", "diffusion", "jumps"});
    if (!noise.contains("q")) throw ConfigError("noise: missing 'q'");
    if (noise.at("q").is_number())
        cfg.q.assign(cfg.modes, noise.at("q").get<double>());
    else
        cfg.q = number_list(noise.at("q"), "noise.q");
    if (cfg.q.size() != cfg.modes)
        throw ConfigError("noise: 'q' length must equal mode count");

    if (!noise.contains("diffusion")) throw ConfigError("noise: missing 'diffusion'");
    const json& diff = noise.at("diffusion");
    check_keys(diff, "noise.diffusion", {"family", "amplitudes", "profile"});
    const std::string family = get_string(diff, "noise.diffusion", "family");
    if (family == "linear-diagonal")
        cfg.diffusion_kind = DiffusionKind::LinearDiagonal;
    else if (family == "additive")
        cfg.diffusion_kind = DiffusionKind::Additive;
    else if (family == "bounded-saturating")
        cfg.diffusion_kind = DiffusionKind::BoundedSaturating;
    else
        throw ConfigError("noise.diffusion: unknown family '" + family + "'");
    if (!diff.contains("amplitudes"))
        throw ConfigError("noise.diffusion: missing 'amplitudes'");
    cfg.diffusion_amplitudes =
        parse_amplitudes(diff.at("amplitudes"), "noise.diffusion", cfg.modes, cfg.states);
    cfg.diffusion_profile = parse_profile(diff.contains("profile") ? diff.at("profile") : json(),
                                          "noise.diffusion.profile");

    if (noise.contains("jumps")) {
        cfg.has_jump_section = true;
        const json& jumps = noise.at("jumps");
        check_keys(jumps, "noise.jumps", {"intensity", "family", "amplitudes", "marks", "profile"});
        cfg.jump_intensity = get_number(jumps, "noise.jumps", "intensity");
        const std::string jfam = get_string(jumps, "noise.jumps", "family");
        if (jfam == "linear-diagonal")
            cfg.jump_kind = JumpFamilyKind::LinearDiagonal;
        else if (jfam == "additive")
            cfg.jump_kind = JumpFamilyKind::Additive;
        else
            throw ConfigError("noise.jumps: unknown family '" + jfam + "'");
        if (!jumps.contains("amplitudes"))
            throw ConfigError("noise.jumps: missing 'amplitudes'");
        cfg.jump_amplitudes =
            parse_amplitudes(jumps.at("amplitudes"), "noise.jumps", cfg.modes, cfg.states);
        if (!jumps.contains("marks")) throw ConfigError("noise.jumps: missing 'marks'");
        const json& marks = jumps.at("marks");
        check_keys(marks, "noise.jumps.marks", {"kind", "value", "lo", "hi"});
        const std::string mkind = get_string(marks, "noise.jumps.marks", "kind");
        if (mkind == "fixed") {
            cfg.jump_marks.kind = MarkDistribution::Kind::Fixed;
            cfg.jump_marks.a = get_number(marks, "noise.jumps.marks", "value");
        } else if (mkind == "pm") {
            cfg.jump_marks.kind = MarkDistribution::Kind::PlusMinus;
            cfg.jump_marks.a = get_number(marks, "noise.jumps.marks", "value");
        } else if (mkind == "uniform") {
            cfg.jump_marks.kind = MarkDistribution::Kind::Uniform;
            cfg.jump_marks.a = get_number(marks, "noise.jumps.marks", "lo");
            cfg.jump_marks.b = get_number(marks, "noise.jumps.marks", "hi");
        } else {
            throw ConfigError("noise.jumps.marks: unknown kind '" + mkind + "'");
        }
        cfg.jump_profile = parse_profile(
            jumps.contains("profile") ? jumps.at("profile") : json(), "noise.jumps.profile");
    }
    if (cfg.jumps_on && !cfg.has_jump_section)
        throw ConfigError("config: sim.jumps is true but noise.jumps is missing");

    // --- analysis ---
    if (doc.contains("analysis")) {
        const json& an = doc.at("analysis");
        check_keys(an, "analysis",
                   {"p_list", "paths", "burn_in", "window", "p_max", "hypothesis_samples",
                    "hypothesis_mode", "sweep_k"});
        if (an.contains("p_list")) {
            cfg.analysis.p_list.clear();
            for (const auto& v : an.at("p_list")) {
                if (!v.is_number_integer())
                    throw ConfigError("analysis: 'p_list' must hold integers");
                cfg.analysis.p_list.push_back(v.get<int>());
            }
            if (cfg.analysis.p_list.empty())
                throw ConfigError("analysis: 'p_list' must be nonempty");
        }
        if (an.contains("paths")) {
            const long long n = get_integer(an, "analysis", "paths");
            if (n < 1) throw ConfigError("analysis: 'paths' must be >= 1");
            cfg.analysis.paths = static_cast<std::size_t>(n);
        }
        if (an.contains("burn_in"))
            cfg.analysis.burn_in = get_number(an, "analysis", "burn_in");
        if (an.contains("window")) {
            const auto w = number_list(an.at("window"), "analysis.window");
            if (w.size() != 2 || !(w[0] < w[1]))
                throw ConfigError("analysis: 'window' must be [lo, hi] with lo < hi");
            cfg.analysis.window_lo = w[0];
            cfg.analysis.window_hi = w[1];
        }
        if (an.contains("p_max")) {
            cfg.analysis.p_max = static_cast<int>(get_integer(an, "analysis", "p_max"));
            if (cfg.analysis.p_max < 2) throw ConfigError("analysis: 'p_max' must be >= 2");
        }
        if (an.contains("hypothesis_samples")) {
            const long long n = get_integer(an, "analysis", "hypothesis_samples");
            if (n < 1) throw ConfigError("analysis: 'hypothesis_samples' must be >= 1");
            cfg.analysis.hypothesis_samples = static_cast<std::size_t>(n);
        }
        if (an.contains("hypothesis_mode")) {
            const std::string mode = get_string(an, "analysis", "hypothesis_mode");
            if (mode == "H")
                cfg.analysis.hypothesis_mode = HypothesisMode::Constant;
            else if (mode == "H-prime")
                cfg.analysis.hypothesis_mode = HypothesisMode::TimeDependent;
            else
                throw ConfigError("analysis: hypothesis_mode must be 'H' or 'H-prime'");
        }
        if (an.contains("sweep_k"))
            cfg.analysis.sweep_k = number_list(an.at("sweep_k"), "analysis.sweep_k");
    }

    // Cross-field checks that need the whole document.
    if (cfg.initial_state < 1 || cfg.initial_state > cfg.states)
        throw ConfigError("chain: 'initial_state' out of range");
    const double lo = cfg.window_lo();
    const double hi = cfg.window_hi();
    if (lo + 1e-12 < cfg.analysis.effective_burn_in(cfg.nu, cfg.lambda1))
        throw ConfigError("analysis: window starts before the burn-in");
    if (hi > cfg.horizon + 1e-12)
        throw ConfigError("analysis: window extends past the horizon");
    for (int p : cfg.analysis.p_list)
        if (p < 1) throw ConfigError("analysis: moment orders must be >= 1");

    // Build once to surface construction-time validation errors here.
    (void)cfg.build_model();
    cfg.build_sim().validate(cfg.build_model().spectrum);
    return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

std::string RunConfig::to_json_text() const {
    json doc;
    doc["schema_version"] = schema_version;
    doc["seed"] = seed;
    json sim;
    sim["nu"] = nu;
    sim["dt"] = dt;
    sim["horizon"] = horizon;
    sim["scheme"] = scheme == Scheme::EulerMaruyama ? "euler-maruyama" : "tamed-euler";
    sim["jumps"] = jumps_on;
    sim["blowup_guard"] = blowup_guard;
    sim["record_every"] = record_every;
    json init;
    if (initial.kind == InitialCondition::Kind::Deterministic) {
        init["kind"] = "deterministic";
        if (!initial.coeffs.empty()) init["coeffs"] = initial.coeffs;
    } else {
        init["kind"] = "gaussian";
        init["std"] = initial.std_devs;
    }
    sim["initial"] = init;
    doc["sim"] = sim;

    json spec;
    spec["modes"] = modes;
    spec["shape"] = spectrum_shape;
    if (spectrum_shape == "explicit")
        spec["values"] = spectrum_values;
    else
        spec["lambda1"] = lambda1;
    doc["spectrum"] = spec;

    doc["tensor"] = {{"name", tensor_name}, {"amplitude", tensor_amplitude}};

    json chain;
    chain["states"] = states;
    json rates_json = json::array();
    for (int i = 0; i < states; ++i) {
        json row = json::array();
        for (int j = 0; j < states; ++j)
            row.push_back(rates[static_cast<std::size_t>(i) * states + j]);
        rates_json.push_back(row);
    }
    chain["rates"] = rates_json;
    chain["initial_state"] = initial_state;
    doc["chain"] = chain;

    json noise;
    noise["q"] = q;
    json diff;
    diff["family"] = DiffusionFamily::kind_name(diffusion_kind);
    diff["amplitudes"] = diffusion_amplitudes;
    diff["profile"] = profile_json(diffusion_profile);
    noise["diffusion"] = diff;
    if (has_jump_section) {
        json jumps;
        jumps["intensity"] = jump_intensity;
        jumps["family"] = JumpKernel::kind_name(jump_kind);
        jumps["amplitudes"] = jump_amplitudes;
        json marks;
        marks["kind"] = jump_marks.name();
        if (jump_marks.kind == MarkDistribution::Kind::Uniform) {
            marks["lo"] = jump_marks.a;
            marks["hi"] = jump_marks.b;
        } else {
            marks["value"] = jump_marks.a;
        }
        jumps["marks"] = marks;
        jumps["profile"] = profile_json(jump_profile);
        noise["jumps"] = jumps;
    }
    doc["noise"] = noise;

    json an;
    an["p_list"] = analysis.p_list;
    an["paths"] = analysis.paths;
    if (analysis.burn_in) an["burn_in"] = *analysis.burn_in;
    an["window"] = {window_lo(), window_hi()};
    an["p_max"] = analysis.p_max;
    an["hypothesis_samples"] = analysis.hypothesis_samples;
    an["hypothesis_mode"] =
        analysis.hypothesis_mode == HypothesisMode::Constant ? "H" : "H-prime";
    if (!analysis.sweep_k.empty()) an["sweep_k"] = analysis.sweep_k;
    doc["analysis"] = an;

    return doc.dump(2);
}

SimConfig RunConfig::build_sim() const {
    SimConfig sim;
    sim.nu = nu;
    sim.dt = dt;
    sim.horizon = horizon;
    sim.scheme = scheme;
    sim.jumps_on = jumps_on;
    sim.blowup_guard = blowup_guard;
    sim.record_every = record_every;
    sim.initial = initial;
    return sim;
}

Model RunConfig::build_model() const {
    StokesSpectrum spectrum = (spectrum_shape == "explicit")
                                  ? StokesSpectrum(spectrum_values)
                                  : StokesSpectrum::weyl(modes, lambda1);
    ConvectionTensor tensor = ConvectionTensor::builtin(tensor_name, modes, tensor_amplitude);
    CovarianceSpectrum qspec(q);
    DiffusionFamily diffusion(diffusion_kind, diffusion_amplitudes, diffusion_profile, qspec);
    std::optional<JumpKernel> jump_kernel;
    if (has_jump_section)
        jump_kernel = JumpKernel(jump_intensity, jump_marks, jump_kind, jump_amplitudes,
                                 jump_profile);
    GeneratorMatrix generator = GeneratorMatrix::from_rates(states, rates);
    Model model{std::move(spectrum), std::move(tensor),   std::move(qspec),
                std::move(diffusion), std::move(jump_kernel), std::move(generator),
                initial_state};
    model.validate();
    return model;
}

double RunConfig::window_lo() const {
    return analysis.window_lo.value_or(analysis.effective_burn_in(nu, lambda1));
}

double RunConfig::window_hi() const { return analysis.window_hi.value_or(horizon); }

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

} // namespace snse
