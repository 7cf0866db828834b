#include "snse/cli.hpp"

#include "snse/csv.hpp"
#include "snse/energy_audit.hpp"
#include "snse/errors.hpp"
#include "snse/run_config.hpp"
#include "snse/stability_lab.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace snse::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommandContext {
    std::string command;
    RunConfig cfg;
    fs::path out_dir;
    std::size_t paths = 1;
    bool quiet = false;
    std::vector<fs::path> written;
    json extra;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void note(const std::string& message) const {
        if (!quiet) std::cout << "[snse-lab] " << message << "\n";
    }

    void save_table(const csv::Table& table, const std::string& name) {
        const fs::path path = out_dir / name;
        table.write(path);
        written.push_back(path);
        note("wrote " + path.string());
    }

    void save_json(const json& doc, const std::string& name) {
        const fs::path path = out_dir / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
        out << doc.dump(2) << "\n";
        if (!out.good()) throw IoError("failed writing '" + path.string() + "'");
        written.push_back(path);
        note("wrote " + path.string());
    }

    void write_manifest() {
        json manifest;
        manifest["command"] = command;
        manifest["version"] = kVersion;
        manifest["config_hash"] = cfg.hash;
        manifest["config_echo"] = cfg.echo;
        manifest["seed"] = cfg.seed;
        manifest["paths"] = paths;
        const auto elapsed = std::chrono::steady_clock::now() - start;
        manifest["wall_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
        json outputs = json::array();
        for (const auto& p : written) outputs.push_back(p.filename().string());
        manifest["outputs"] = outputs;
        for (const auto& [key, value] : extra.items()) manifest[key] = value;

        const fs::path path = out_dir / "manifest.json";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
        out << manifest.dump(2) << "\n";
        if (!out.good()) throw IoError("failed writing '" + path.string() + "'");
        note("wrote " + path.string());
    }

    void remove_partial_outputs() {
        for (const auto& p : written) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        written.clear();
    }
};

json number_or_null(double x) {
    if (std::isnan(x)) return nullptr;
    return x;
}

json estimate_to_json(const ExponentEstimate& est) {
    json j;
    j["slope"] = est.ok ? json(est.slope) : json(nullptr);
    j["stderr"] = est.ok ? json(est.se) : json(nullptr);
    j["ok"] = est.ok;
    j["points"] = est.points;
    if (est.ok) {
        // fitted stand-ins for the decay bound's existential prefactor/onset pair
        j["log_prefactor"] = est.log_prefactor;
        j["onset_time"] = est.onset_time;
    }
    if (!est.note.empty()) j["note"] = est.note;
    return j;
}

json hypotheses_to_json(const HypothesisReport& rep) {
    json j;
    j["mode"] = rep.mode == HypothesisMode::Constant ? "H" : "H-prime";
    j["all_pass"] = rep.all_pass;
    j["samples"] = rep.samples;
    j["k_declared"] = rep.k_declared;
    j["k_inf"] = rep.k_inf;
    j["k_l1"] = std::isfinite(rep.k_l1) ? json(rep.k_l1) : json("infinity");
    json rows = json::array();
    for (const auto& row : rep.rows) {
        json r;
        r["p"] = row.p;
        r["sigma_growth"] = {{"empirical", row.sigma_growth_emp},
                             {"declared", row.sigma_growth_decl}};
        r["sigma_lipschitz"] = {{"empirical", row.sigma_lip_emp},
                                {"declared", row.sigma_lip_decl}};
        r["jump_growth"] = {{"empirical", row.jump_growth_emp},
                            {"declared", row.jump_growth_decl}};
        r["jump_lipschitz"] = {{"empirical", row.jump_lip_emp},
                               {"declared", row.jump_lip_decl}};
        r["pass"] = row.pass;
        rows.push_back(r);
    }
    j["rows"] = rows;
    if (rep.failure) {
        json w;
        w["inequality"] = rep.failure->inequality;
        w["t"] = rep.failure->t;
        w["regime"] = rep.failure->regime;
        w["lhs"] = rep.failure->lhs;
        w["bound"] = rep.failure->bound;
        w["u"] = rep.failure->u;
        if (!rep.failure->v.empty()) w["v"] = rep.failure->v;
        j["witness"] = w;
    }
    return j;
}

HypothesisReport run_hypotheses(const CommandContext& ctx, const Model& model) {
    const JumpKernel* jumps =
        (ctx.cfg.jumps_on && model.jumps) ? &*model.jumps : nullptr;
    int p_max = ctx.cfg.analysis.p_max;
    for (int p : ctx.cfg.analysis.p_list) p_max = std::max(p_max, p);
    return verify_hypotheses(model.diffusion, jumps, model.q,
                             ctx.cfg.analysis.hypothesis_mode, p_max,
                             ctx.cfg.analysis.hypothesis_samples, ctx.cfg.seed);
}

void cmd_chain(CommandContext& ctx) {
    const Model model = ctx.cfg.build_model();
    const ChainPath path =
        simulate_chain_prm(model.generator, model.initial_regime, ctx.cfg.horizon,
                           Rng::derive(ctx.cfg.seed, rng_stream::kChain, 0));

    csv::Table table(ctx.cfg.hash);
    table.header({"t_jump", "new_state"});
    for (std::size_t k = 0; k < path.jump_times.size(); ++k)
        table.row(path.jump_times[k], path.post_states[k]);
    ctx.save_table(table, "chain.csv");

    const OccupationStats occ = occupation_stats(path);
    json report;
    report["config_hash"] = ctx.cfg.hash;
    report["horizon"] = path.horizon;
    report["initial_state"] = path.initial_state;
    report["jump_count"] = occ.jump_count;
    report["occupation"] = occ.fractions;
    json rates = json::array();
    for (const auto& row : occ.rates) {
        json r = json::array();
        for (double v : row) r.push_back(number_or_null(v));
        rates.push_back(r);
    }
    report["empirical_rates"] = rates;
    ctx.save_json(report, "occupation.json");
    ctx.extra["jump_count"] = occ.jump_count;
}

void cmd_simulate(CommandContext& ctx) {
    const Model model = ctx.cfg.build_model();
    const SimConfig sim = ctx.cfg.build_sim();

    if (ctx.paths == 1) {
        const HybridPath path = integrate_path(sim, model, ctx.cfg.seed, 0, false);
        csv::Table table(ctx.cfg.hash);
        table.header({"t", "h_norm", "v_norm", "regime", "M1", "M2"});
        for (const auto& s : path.samples)
            table.row(s.t, s.h_norm, s.v_norm, s.regime, s.m1, s.m2);
        ctx.save_table(table, "path.csv");
        ctx.extra["blowup"] = path.blowup;
        if (path.blowup) throw AuditError("simulate: path hit the blowup guard");
        return;
    }

    const EnsembleSummary summary =
        ensemble(sim, model, ctx.paths, ctx.cfg.seed, ctx.cfg.analysis.p_list);
    csv::Table table(ctx.cfg.hash);
    table.header({"t", "p", "moment", "stderr"});
    for (std::size_t pi = 0; pi < summary.p_list.size(); ++pi)
        for (std::size_t r = 0; r < summary.times.size(); ++r)
            table.row(summary.times[r], summary.p_list[pi], summary.moment_mean[pi][r],
                      summary.moment_se[pi][r]);
    ctx.save_table(table, "ensemble.csv");

    csv::Table mart(ctx.cfg.hash);
    mart.header({"t", "m1_mean", "m1_stderr", "m1_abs_mean", "m2_mean", "m2_stderr",
                 "m2_abs_mean"});
    for (std::size_t r = 0; r < summary.times.size(); ++r)
        mart.row(summary.times[r], summary.m1_mean[r], summary.m1_se[r],
                 summary.m1_abs_mean[r], summary.m2_mean[r], summary.m2_se[r],
                 summary.m2_abs_mean[r]);
    ctx.save_table(mart, "martingale.csv");

    ctx.extra["blowup_count"] = summary.blowup_count;
    ctx.extra["unreliable"] = summary.unreliable;
}

void write_ledger_csv(CommandContext& ctx, const IdentityLedger& led, const std::string& name) {
    csv::Table table(ctx.cfg.hash);
    table.header({"t", "state_p", "visc_int", "lq_int", "wiener_int", "jump_mart",
                  "comp_drift", "comp_unreduced", "residual"});
    for (std::size_t i = 0; i < led.times.size(); ++i)
        table.row(led.times[i], led.state_p[i], led.visc_int[i], led.lq_int[i],
                  led.wiener_int[i], led.jump_mart[i], led.comp_drift[i], led.comp_unreduced[i],
                  led.residual[i]);
    ctx.save_table(table, name);
}

void cmd_audit(CommandContext& ctx) {
    const Model model = ctx.cfg.build_model();
    const SimConfig sim = ctx.cfg.build_sim();

    // structure constants of the convection surrogate, both orientations
    csv::Table tensor_csv(ctx.cfg.hash);
    tensor_csv.header({"i", "j", "k", "c"});
    for (const auto& t : model.tensor.triples()) {
        tensor_csv.row(t.i, t.j, t.k, t.c);
        tensor_csv.row(t.i, t.k, t.j, -t.c);
    }
    ctx.save_table(tensor_csv, "tensor.csv");

    const HybridPath path = integrate_path(sim, model, ctx.cfg.seed, 0, true);
    if (path.blowup) throw AuditError("audit: path hit the blowup guard");

    const IdentityLedger energy = audit_energy(path, sim);
    write_ledger_csv(ctx, energy, "energy.csv");
    ctx.extra["energy_max_residual"] = energy.max_abs_residual(sim.horizon);

    json moment_residuals = json::object();
    for (int p : ctx.cfg.analysis.p_list) {
        if (p < 3) continue;
        const IdentityLedger led = audit_pth_moment(path, sim, p);
        write_ledger_csv(ctx, led, "moment_p" + std::to_string(p) + ".csv");
        moment_residuals["p" + std::to_string(p)] = led.max_abs_residual(sim.horizon);
    }
    if (!moment_residuals.empty()) ctx.extra["moment_max_residuals"] = moment_residuals;
}

void cmd_hypotheses(CommandContext& ctx) {
    const Model model = ctx.cfg.build_model();
    const HypothesisReport rep = run_hypotheses(ctx, model);
    json doc = hypotheses_to_json(rep);
    doc["config_hash"] = ctx.cfg.hash;
    ctx.save_json(doc, "hypotheses.json");
    ctx.extra["all_pass"] = rep.all_pass;
}

void cmd_stability(CommandContext& ctx) {
    const Model model = ctx.cfg.build_model();
    const SimConfig sim = ctx.cfg.build_sim();
    for (int p : ctx.cfg.analysis.p_list)
        if (p < 2) throw ConfigError("stability: p_list entries must be >= 2");

    const HypothesisReport hyp = run_hypotheses(ctx, model);
    const EnsembleSummary summary =
        ensemble(sim, model, ctx.paths, ctx.cfg.seed, ctx.cfg.analysis.p_list);
    const JumpKernel* jumps = (ctx.cfg.jumps_on && model.jumps) ? &*model.jumps : nullptr;

    csv::Table table(ctx.cfg.hash);
    table.header({"p", "mode", "declared_k", "threshold", "exponent", "stderr", "bound",
                  "verdict"});
    json reports = json::array();
    for (int p : ctx.cfg.analysis.p_list) {
        const auto est =
            estimate_moment_exponent(summary, p, ctx.cfg.window_lo(), ctx.cfg.window_hi());
        const double declared = declared_growth_constant(model.diffusion, jumps, p);
        const auto rep = stability_verdict(p, ctx.cfg.jumps_on, ctx.cfg.nu,
                                           model.spectrum.lambda1(), declared, est, hyp);
        table.row(p, ctx.cfg.jumps_on ? "jump" : "continuous", declared, rep.threshold_gate,
                  est.ok ? csv::cell(est.slope) : std::string("nan"),
                  est.ok ? csv::cell(est.se) : std::string("nan"),
                  rep.below_threshold ? csv::cell(-rep.guaranteed_rate) : std::string("nan"),
                  verdict_name(rep.verdict));

        json r;
        r["p"] = p;
        r["declared_k"] = declared;
        r["thresholds"] = {{"continuous_kmax", rep.thresh.continuous_kmax},
                           {"jump_kmax", rep.thresh.jump_kmax},
                           {"jump_kmax_meansq", rep.thresh.jump_kmax_meansq}};
        r["threshold_gate"] = rep.threshold_gate;
        r["below_threshold"] = rep.below_threshold;
        if (rep.below_threshold) r["exponent_bound"] = -rep.guaranteed_rate;
        r["estimate"] = estimate_to_json(est);
        r["verdict"] = verdict_name(rep.verdict);
        r["detail"] = rep.detail;
        reports.push_back(r);
    }
    ctx.save_table(table, "stability.csv");

    json doc;
    doc["config_hash"] = ctx.cfg.hash;
    doc["hypotheses"] = hypotheses_to_json(hyp);
    doc["moment_reports"] = reports;
    doc["blowup_count"] = summary.blowup_count;
    doc["unreliable"] = summary.unreliable;

    if (!summary.pathwise_lambda.empty()) {
        const std::size_t excluded = summary.n_used() - summary.pathwise_lambda.size() +
                                     summary.blowup_count;
        const auto as_rep = estimate_as_exponent(summary.pathwise_lambda, excluded);
        const auto thr = thresholds(2, ctx.cfg.nu, model.spectrum.lambda1());
        json as;
        as["median"] = as_rep.median;
        as["q95"] = as_rep.q95;
        as["mean"] = as_rep.mean;
        as["stderr"] = as_rep.se;
        as["n"] = as_rep.n;
        as["excluded"] = as_rep.excluded;
        // the almost-sure bound needs integrable noise profiles (finite ||K||_1)
        if (std::isfinite(hyp.k_l1))
            as["bound"] = ctx.cfg.jumps_on ? thr.as_bound_jump(hyp.k_inf)
                                           : thr.as_bound_continuous(hyp.k_inf);
        else
            as["bound"] = nullptr;
        doc["as_exponent"] = as;
    }

    if (summary.times.size() >= 5) {
        const auto mart = martingale_diagnostics(summary);
        json m;
        m["sup_mean_abs_m1"] = mart.sup_mean_abs_m1;
        m["sup_mean_abs_m2"] = mart.sup_mean_abs_m2;
        m["tail_start"] = mart.tail_start;
        m["m1_tail_slope"] = mart.m1_tail_trend.slope;
        m["m1_tail_slope_stderr"] = mart.m1_tail_trend.slope_se;
        m["m1_flat"] = mart.m1_flat;
        m["m2_tail_slope"] = mart.m2_tail_trend.slope;
        m["m2_tail_slope_stderr"] = mart.m2_tail_trend.slope_se;
        m["m2_flat"] = mart.m2_flat;
        doc["martingales"] = m;
    }
    ctx.save_json(doc, "report.json");
    ctx.extra["blowup_count"] = summary.blowup_count;
}

void cmd_sweep(CommandContext& ctx) {
    const Model model = ctx.cfg.build_model();
    const SimConfig sim = ctx.cfg.build_sim();
    const int p = ctx.cfg.analysis.p_list.front();
    if (p < 2) throw ConfigError("sweep: leading p_list entry must be >= 2");

    const SweepTable table = threshold_sweep(
        sim, model, p, ctx.cfg.analysis.sweep_k, ctx.paths, ctx.cfg.seed, ctx.cfg.window_lo(),
        ctx.cfg.window_hi(), ctx.cfg.analysis.p_max, ctx.cfg.analysis.hypothesis_samples);

    csv::Table out(ctx.cfg.hash);
    out.header({"K", "p", "exponent", "stderr", "bound", "verdict"});
    for (const auto& pt : table.points)
        out.row(pt.k, p, pt.estimate.ok ? csv::cell(pt.estimate.slope) : std::string("nan"),
                pt.estimate.ok ? csv::cell(pt.estimate.se) : std::string("nan"),
                pt.verdict != Verdict::Inconclusive ? csv::cell(pt.bound) : std::string("nan"),
                verdict_name(pt.verdict));
    ctx.save_table(out, "sweep.csv");
    ctx.extra["monotone_ok"] = table.monotone_ok;
    ctx.extra["grid_size"] = table.points.size();
}

int dispatch(const std::string& command, const std::string& config_path,
             const std::string& out_dir, std::optional<std::uint64_t> seed_override,
             std::optional<std::size_t> paths_override, bool quiet) {
    CommandContext ctx;
    ctx.command = command;
    ctx.quiet = quiet;
    ctx.cfg = RunConfig::parse_file(config_path);
    if (seed_override) ctx.cfg.seed = *seed_override;
    if (paths_override) ctx.cfg.analysis.paths = *paths_override;
    ctx.paths = ctx.cfg.analysis.paths;
    ctx.out_dir = out_dir;

    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir + "'");

    try {
        if (command == "chain")
            cmd_chain(ctx);
        else if (command == "simulate")
            cmd_simulate(ctx);
        else if (command == "audit")
            cmd_audit(ctx);
        else if (command == "stability")
            cmd_stability(ctx);
        else if (command == "sweep")
            cmd_sweep(ctx);
        else if (command == "hypotheses")
            cmd_hypotheses(ctx);
        else
            throw ConfigError("unknown command '" + command + "'");
    } catch (...) {
        ctx.remove_partial_outputs();
        throw;
    }
    ctx.write_manifest();
    return 0;
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Monte Carlo stability lab for the switched stochastic Navier-Stokes "
                 "Galerkin system"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    struct Options {
        std::string config;
        std::string out;
        std::optional<std::uint64_t> seed;
        std::optional<std::size_t> paths;
        bool quiet = false;
    };
    std::vector<std::pair<std::string, Options>> commands;
    commands.reserve(6);
    for (const char* name : {"chain", "simulate", "audit", "stability", "sweep", "hypotheses"}) {
        commands.emplace_back(name, Options{});
    }
    for (auto& [name, opts] : commands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", opts.config, "run-config JSON document")->required();
        sub->add_option("--out", opts.out, "output directory")->required();
        sub->add_option("--seed", opts.seed, "master seed override");
        sub->add_option("--paths", opts.paths, "path count override");
        sub->add_flag("--quiet", opts.quiet, "suppress progress notes");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        for (const auto& [name, opts] : commands) {
            if (app.got_subcommand(name))
                return dispatch(name, opts.config, opts.out, opts.seed, opts.paths, opts.quiet);
        }
        std::cerr << "error: no command given\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const AuditError& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 3;
    }
}

int run(const std::vector<std::string>& args) {
    std::vector<std::string> argv_storage;
    argv_storage.reserve(args.size() + 1);
    argv_storage.push_back("snse-lab");
    for (const auto& a : args) argv_storage.push_back(a);
    std::vector<const char*> argv;
    argv.reserve(argv_storage.size());
    for (const auto& s : argv_storage) argv.push_back(s.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

} // namespace snse::cli
