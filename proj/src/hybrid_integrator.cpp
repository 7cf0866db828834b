#include "snse/hybrid_integrator.hpp"

#include "snse/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace snse {

SpectralField InitialCondition::sample(std::size_t modes, Rng& rng) const {
    SpectralField x(modes, 0.0);
    if (kind == Kind::Deterministic) {
        if (coeffs.empty()) {
            x[0] = 1.0;   // default: unit mass on the first mode
        } else {
            if (coeffs.size() != modes)
                throw ConfigError("initial condition: coefficient count must equal mode count");
            x = coeffs;
        }
        return x;
    }
    if (std_devs.size() != modes && std_devs.size() != 1)
        throw ConfigError("initial condition: std_devs must be scalar or one per mode");
    for (std::size_t k = 0; k < modes; ++k) {
        const double sd = std_devs.size() == 1 ? std_devs[0] : std_devs[k];
        if (!(sd >= 0.0)) throw ConfigError("initial condition: std_devs must be nonnegative");
        x[k] = sd * rng.normal();
    }
    return x;
}

void SimConfig::validate(const StokesSpectrum& spectrum) const {
    if (!(nu > 0.0) && !(allow_zero_viscosity && nu == 0.0))
        throw ConfigError("sim: nu must be positive");
    if (!(dt > 0.0)) throw ConfigError("sim: dt must be positive");
    if (!(horizon > 0.0)) throw ConfigError("sim: horizon must be positive");
    if (dt > horizon) throw ConfigError("sim: dt must not exceed the horizon");
    if (!(blowup_guard > 0.0)) throw ConfigError("sim: blowup_guard must be positive");
    if (record_every == 0) throw ConfigError("sim: record_every must be >= 1");
    if (scheme == Scheme::EulerMaruyama && !(dt * nu * spectrum.lambda_max() < 1.0))
        throw ConfigError("sim: euler-maruyama needs dt * nu * lambda_max < 1 "
                          "(use tamed-euler for stiffer runs)");
}

void Model::validate() const {
    const std::size_t n = spectrum.modes();
    if (q.modes() != n) throw ConfigError("model: covariance mode count mismatch");
    if (diffusion.modes() != n) throw ConfigError("model: diffusion mode count mismatch");
    if (diffusion.regimes() != generator.states())
        throw ConfigError("model: diffusion regime count must match chain states");
    if (jumps) {
        if (jumps->modes() != n) throw ConfigError("model: jump kernel mode count mismatch");
        if (jumps->regimes() != generator.states())
            throw ConfigError("model: jump kernel regime count must match chain states");
    }
    if (!tensor.empty() && tensor.max_index() >= n)
        throw ConfigError("model: convection tensor indexes beyond mode count");
    if (initial_regime < 1 || initial_regime > generator.states())
        throw ConfigError("model: initial regime out of range");
}

SpectralField drift(std::span<const double> u, double nu, const ConvectionTensor& tensor,
                    const StokesSpectrum& spectrum) {
    SpectralField d = tensor.apply(u, u);   // B(u, u)
    for (std::size_t k = 0; k < u.size(); ++k)
        d[k] = -nu * spectrum.lambda(k) * u[k] - d[k];
    return d;
}

namespace {

/// Scratch and accumulators for one path integration.
struct PathWorker {
    const SimConfig& cfg;
    const Model& model;
    const ChainPath& chain;
    HybridPath& path;
    Rng wiener_rng;
    Rng jump_rng;
    SpectralField u;
    Regime regime;
    double m1 = 0.0;
    double m2 = 0.0;
    std::vector<double> coeff;      // diffusion coefficients scratch
    std::vector<double> gvec;       // jump vector scratch
    std::vector<std::pair<double, double>> atoms;   // (mark, probability)

    PathWorker(const SimConfig& c, const Model& m, const ChainPath& ch, HybridPath& p,
               std::uint64_t seed, std::uint64_t index)
        : cfg(c), model(m), chain(ch), path(p),
          wiener_rng(Rng::derive(seed, rng_stream::kWiener, index)),
          jump_rng(Rng::derive(seed, rng_stream::kJumps, index)),
          coeff(m.spectrum.modes()), gvec(m.spectrum.modes()) {
        if (cfg.jumps_on && model.jumps) atoms = model.jumps->marks().atoms();
    }

    bool check_guard(double t) {
        const double sq = h_norm_sq(u);
        if (std::isfinite(sq) && sq <= cfg.blowup_guard * cfg.blowup_guard) return true;
        path.blowup = true;
        path.blowup_time = t;
        return false;
    }

    /// Euler sub-step over [a, a+h) in a fixed regime; integrands at the
    /// left endpoint. Returns false on blowup.
    bool continuous_substep(double a, double h) {
        if (h <= 0.0) return true;
        const std::size_t n = u.size();

        SpectralField d = drift(u, cfg.nu, model.tensor, model.spectrum);
        if (cfg.scheme == Scheme::TamedEuler) {
            const double scale = 1.0 + h * h_norm(d);
            for (double& dk : d) dk /= scale;
        }

        LedgerRow row;
        row.t = a;
        row.h = h;
        row.regime = regime;
        row.u_h_sq = h_norm_sq(u);
        row.u_v_sq = v_norm_sq(u, model.spectrum);

        if (cfg.jumps_on && model.jumps) {
            model.jumps->mean_jump(a, u, regime, gvec);
            double comp_dot = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                comp_dot += u[k] * gvec[k];
                d[k] -= gvec[k];   // compensator drift of the N~ integral, untamed
            }
            row.comp_dot = comp_dot;
            row.comp_sq = compensator_integral(*model.jumps, a, u, regime, 2.0);
            row.n_atoms = static_cast<int>(std::min<std::size_t>(atoms.size(), 2));
            for (std::size_t j = 0; j < atoms.size() && j < 2; ++j) {
                model.jumps->apply(a, u, regime, atoms[j].first, gvec);
                double dot = 0.0, gsq = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    dot += u[k] * gvec[k];
                    gsq += gvec[k] * gvec[k];
                }
                row.atom_weight[j] = model.jumps->intensity() * atoms[j].second;
                row.atom_dot[j] = dot;
                row.atom_gsq[j] = gsq;
            }
        }

        model.diffusion.coefficients(a, u, regime, coeff);
        row.hs_sq = 0.0;
        double wiener_dot = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            row.hs_sq += model.q.q(k) * coeff[k] * coeff[k];
            const double dw = std::sqrt(model.q.q(k) * h) * wiener_rng.normal();
            wiener_dot += u[k] * coeff[k] * dw;
            u[k] += h * d[k] + coeff[k] * dw;
        }
        row.wiener_dot = wiener_dot;
        m1 += wiener_dot;
        m2 -= (2.0 * row.comp_dot + row.comp_sq) * h;

        if (path.ledger_enabled) path.ledger.push_back(row);
        return check_guard(a + h);
    }

    bool apply_jump(const JumpEvent& event) {
        const std::size_t n = u.size();
        model.jumps->apply(event.time, u, regime, event.mark, gvec);
        JumpRecord rec;
        rec.t = event.time;
        rec.regime = regime;
        rec.mark = event.mark;
        rec.u_sq_pre = h_norm_sq(u);
        for (std::size_t k = 0; k < n; ++k) {
            rec.dot_ug += u[k] * gvec[k];
            rec.g_sq += gvec[k] * gvec[k];
        }
        m2 += 2.0 * rec.dot_ug + rec.g_sq;   // |u + G|^2 - |u|^2
        for (std::size_t k = 0; k < n; ++k) u[k] += gvec[k];
        rec.u_sq_post = h_norm_sq(u);
        path.jump_records.push_back(rec);
        return check_guard(event.time);
    }
};

} // namespace

HybridPath integrate_path(const SimConfig& cfg, const Model& model, const ChainPath& chain,
                          std::uint64_t master_seed, std::uint64_t path_index,
                          bool with_ledger) {
    model.validate();
    cfg.validate(model.spectrum);
    if (cfg.jumps_on && !model.jumps)
        throw ConfigError("integrate_path: jumps enabled but no jump kernel configured");
    if (chain.horizon < cfg.horizon)
        throw ConfigError("integrate_path: chain horizon shorter than simulation horizon");

    HybridPath path;
    path.ledger_enabled = with_ledger;

    Rng init_rng(Rng::derive(master_seed, rng_stream::kInitial, path_index));
    PathWorker worker(cfg, model, chain, path, master_seed, path_index);
    worker.u = cfg.initial.sample(model.spectrum.modes(), init_rng);
    worker.regime = chain.state_at(0.0);
    path.initial_h_sq = h_norm_sq(worker.u);

    path.samples.push_back({0.0, h_norm(worker.u), v_norm(worker.u, model.spectrum),
                            worker.regime, 0.0, 0.0});

    const auto n_steps = static_cast<std::size_t>(std::ceil(cfg.horizon / cfg.dt - 1e-12));
    std::size_t chain_idx = 0;
    bool alive = worker.check_guard(0.0);

    for (std::size_t step = 0; alive && step < n_steps; ++step) {
        const double a = static_cast<double>(step) * cfg.dt;
        const double b = std::min(a + cfg.dt, cfg.horizon);

        // Regime switches at exactly `a` belong to this step's start.
        while (chain_idx < chain.jump_times.size() && chain.jump_times[chain_idx] <= a) {
            worker.regime = chain.post_states[chain_idx];
            ++chain_idx;
        }

        std::vector<JumpEvent> events;
        if (cfg.jumps_on && model.jumps)
            events = sample_jumps(*model.jumps, a, b - a, worker.jump_rng);
        std::size_t event_idx = 0;

        double cursor = a;
        std::size_t switch_idx = chain_idx;
        while (alive) {
            double sub_end = b;
            bool switching = false;
            if (switch_idx < chain.jump_times.size() && chain.jump_times[switch_idx] < b) {
                sub_end = chain.jump_times[switch_idx];
                switching = true;
            }
            alive = worker.continuous_substep(cursor, sub_end - cursor);
            while (alive && event_idx < events.size() && events[event_idx].time < sub_end) {
                alive = worker.apply_jump(events[event_idx]);
                ++event_idx;
            }
            if (path.ledger_enabled && !path.ledger.empty()) {
                path.ledger.back().m1_after = worker.m1;
                path.ledger.back().m2_after = worker.m2;
            }
            cursor = sub_end;
            if (!switching) break;
            worker.regime = chain.post_states[switch_idx];
            ++switch_idx;
        }
        chain_idx = switch_idx;

        if (alive && ((step + 1) % cfg.record_every == 0 || step + 1 == n_steps)) {
            path.samples.push_back({b, h_norm(worker.u), v_norm(worker.u, model.spectrum),
                                    chain.state_at(b), worker.m1, worker.m2});
        }
    }

    path.terminal_u = worker.u;
    path.terminal_time = path.blowup ? path.blowup_time : cfg.horizon;
    path.terminal_regime = chain.state_at(path.terminal_time);
    path.m1 = worker.m1;
    path.m2 = worker.m2;
    return path;
}

HybridPath integrate_path(const SimConfig& cfg, const Model& model, std::uint64_t master_seed,
                          std::uint64_t path_index, bool with_ledger) {
    const ChainPath chain =
        simulate_chain_prm(model.generator, model.initial_regime, cfg.horizon,
                           Rng::derive(master_seed, rng_stream::kChain, path_index));
    return integrate_path(cfg, model, chain, master_seed, path_index, with_ledger);
}

std::size_t EnsembleSummary::time_index(double t) const {
    if (times.empty()) throw ConfigError("ensemble summary: no record times");
    std::size_t best = 0;
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double g = std::abs(times[i] - t);
        if (g < gap) {
            gap = g;
            best = i;
        }
    }
    return best;
}

EnsembleSummary ensemble(const SimConfig& cfg, const Model& model, std::size_t n_paths,
                         std::uint64_t master_seed, const std::vector<int>& p_list) {
    if (n_paths < 2) throw ConfigError("ensemble: needs at least 2 paths");
    if (p_list.empty()) throw ConfigError("ensemble: empty moment order list");
    for (int p : p_list)
        if (p < 1) throw ConfigError("ensemble: moment orders must be >= 1");
    model.validate();
    cfg.validate(model.spectrum);

    EnsembleSummary out;
    out.p_list = p_list;
    out.n_paths = n_paths;

    const auto n_steps = static_cast<std::size_t>(std::ceil(cfg.horizon / cfg.dt - 1e-12));
    out.times.push_back(0.0);
    for (std::size_t step = 0; step < n_steps; ++step) {
        if ((step + 1) % cfg.record_every == 0 || step + 1 == n_steps)
            out.times.push_back(std::min(static_cast<double>(step + 1) * cfg.dt, cfg.horizon));
    }
    const std::size_t R = out.times.size();
    const std::size_t P = p_list.size();

    // Welford accumulators: exact zeros for duplicated paths and stable for
    // long ensembles. `cov_c` tracks the co-moment of adjacent record times.
    struct Acc {
        double mean = 0.0;
        double m2 = 0.0;
        void add(double x, double n) {
            const double d = x - mean;
            mean += d / n;
            m2 += d * (x - mean);
        }
    };
    std::vector<std::vector<Acc>> moment(P, std::vector<Acc>(R));
    std::vector<std::vector<double>> cov_c(P, std::vector<double>(R > 0 ? R - 1 : 0, 0.0));
    std::vector<Acc> m1(R), m1_abs(R), m2(R), m2_abs(R);
    std::vector<double> xs(R, 0.0);
    double n_seen = 0.0;

    for (std::size_t idx = 0; idx < n_paths; ++idx) {
        const HybridPath path = integrate_path(cfg, model, master_seed, idx, false);
        if (path.blowup) {
            ++out.blowup_count;
            continue;
        }
        if (path.samples.size() != R)
            throw AuditError("ensemble: record grid mismatch across paths");

        n_seen += 1.0;
        for (std::size_t pi = 0; pi < P; ++pi) {
            const double p = p_list[pi];
            for (std::size_t r = 0; r < R; ++r)
                xs[r] = std::pow(path.samples[r].h_norm, p);
            for (std::size_t r = 0; r + 1 < R; ++r) {
                // co-moment update must read the pre-update mean of x_r
                const double dx = xs[r] - moment[pi][r].mean;
                const double mean_next =
                    moment[pi][r + 1].mean + (xs[r + 1] - moment[pi][r + 1].mean) / n_seen;
                cov_c[pi][r] += dx * (xs[r + 1] - mean_next);
            }
            for (std::size_t r = 0; r < R; ++r) moment[pi][r].add(xs[r], n_seen);
        }
        for (std::size_t r = 0; r < R; ++r) {
            m1[r].add(path.samples[r].m1, n_seen);
            m1_abs[r].add(std::abs(path.samples[r].m1), n_seen);
            m2[r].add(path.samples[r].m2, n_seen);
            m2_abs[r].add(std::abs(path.samples[r].m2), n_seen);
        }
        const double term = path.samples.back().h_norm;
        if (term > 0.0)
            out.pathwise_lambda.push_back(std::log(term) / cfg.horizon);
    }

    const double used = static_cast<double>(out.n_used());
    if (used < 2.0) throw AuditError("ensemble: fewer than 2 surviving paths");
    out.unreliable = static_cast<double>(out.blowup_count) >
                     0.01 * static_cast<double>(n_paths);

    auto finalize = [used](const Acc& acc, double& mean, double& se) {
        mean = acc.mean;
        se = std::sqrt(std::max(0.0, acc.m2) / (used - 1.0) / used);
    };

    out.moment_mean.assign(P, std::vector<double>(R, 0.0));
    out.moment_se.assign(P, std::vector<double>(R, 0.0));
    out.moment_cov_adj.assign(P, std::vector<double>(R > 0 ? R - 1 : 0, 0.0));
    for (std::size_t pi = 0; pi < P; ++pi) {
        for (std::size_t r = 0; r < R; ++r)
            finalize(moment[pi][r], out.moment_mean[pi][r], out.moment_se[pi][r]);
        for (std::size_t r = 0; r + 1 < R; ++r)
            out.moment_cov_adj[pi][r] = cov_c[pi][r] / (used - 1.0);
    }
    out.m1_mean.resize(R);
    out.m1_se.resize(R);
    out.m1_abs_mean.resize(R);
    out.m1_abs_se.resize(R);
    out.m2_mean.resize(R);
    out.m2_se.resize(R);
    out.m2_abs_mean.resize(R);
    out.m2_abs_se.resize(R);
    for (std::size_t r = 0; r < R; ++r) {
        finalize(m1[r], out.m1_mean[r], out.m1_se[r]);
        finalize(m1_abs[r], out.m1_abs_mean[r], out.m1_abs_se[r]);
        finalize(m2[r], out.m2_mean[r], out.m2_se[r]);
        finalize(m2_abs[r], out.m2_abs_mean[r], out.m2_abs_se[r]);
    }
    return out;
}

} // namespace snse
