#include "snse/regime_chain.hpp"

#include "snse/errors.hpp"
#include "snse/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace snse {

GeneratorMatrix GeneratorMatrix::from_rates(int m, const std::vector<double>& off_rates) {
    if (m < 1) throw ConfigError("generator: state count must be >= 1");
    if (off_rates.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(m))
        throw ConfigError("generator: rates must be an m x m matrix");
    std::vector<double> gamma(off_rates.size(), 0.0);
    for (int i = 0; i < m; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < m; ++j) {
            if (i == j) continue;
            const double r = off_rates[static_cast<std::size_t>(i) * m + j];
            if (!(r >= 0.0) || !std::isfinite(r))
                throw ConfigError("generator: off-diagonal rate gamma[" + std::to_string(i + 1) +
                                  "][" + std::to_string(j + 1) + "] must be nonnegative");
            gamma[static_cast<std::size_t>(i) * m + j] = r;
            row_sum += r;
        }
        gamma[static_cast<std::size_t>(i) * m + i] = -row_sum;
    }
    return GeneratorMatrix(m, std::move(gamma));
}

double GeneratorMatrix::total_rate() const {
    double total = 0.0;
    for (Regime i = 1; i <= m_; ++i) total += exit_rate(i);
    return total;
}

IntervalPartition build_partition(const GeneratorMatrix& g) {
    IntervalPartition partition;
    double left = 0.0;
    for (Regime i = 1; i <= g.states(); ++i) {
        for (Regime j = 1; j <= g.states(); ++j) {
            if (i == j) continue;
            const double rate = g.rate(i, j);
            const double right = left + rate;
            partition.intervals.push_back({i, j, left, right, rate});
            left = right;
        }
    }
    partition.total_length = left;
    return partition;
}

int jump_displacement(const IntervalPartition& partition, Regime i, double y) {
    // Intervals are laid out consecutively; binary search the one containing y.
    const auto& iv = partition.intervals;
    if (iv.empty() || y < 0.0 || y >= partition.total_length) return 0;
    std::size_t lo = 0, hi = iv.size();
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (y < iv[mid].left)
            hi = mid;
        else if (y >= iv[mid].right)
            lo = mid + 1;
        else {
            return (iv[mid].source == i) ? iv[mid].target - iv[mid].source : 0;
        }
    }
    return 0;
}

Regime ChainPath::state_at(double t) const {
    // Right-continuous: at a jump time the new state already applies.
    Regime state = initial_state;
    for (std::size_t k = 0; k < jump_times.size(); ++k) {
        if (jump_times[k] > t) break;
        state = post_states[k];
    }
    return state;
}

ChainPath simulate_chain_prm(const GeneratorMatrix& g, Regime r0, double horizon,
                             std::uint64_t seed) {
    if (r0 < 1 || r0 > g.states()) throw ConfigError("chain: initial state out of range");
    if (!(horizon > 0.0)) throw ConfigError("chain: horizon must be positive");

    ChainPath path;
    path.initial_state = r0;
    path.states = g.states();
    path.horizon = horizon;

    const IntervalPartition partition = build_partition(g);
    if (partition.total_length <= 0.0) return path;   // no rates, constant path

    Rng rng(seed);
    const std::uint64_t count = rng.poisson(horizon * partition.total_length);
    std::vector<std::pair<double, double>> points;
    points.reserve(count);
    for (std::uint64_t n = 0; n < count; ++n) {
        const double t = rng.uniform(0.0, horizon);
        const double y = rng.uniform(0.0, partition.total_length);
        points.emplace_back(t, y);
    }
    std::sort(points.begin(), points.end());

    Regime state = r0;
    for (const auto& [t, y] : points) {
        const int d = jump_displacement(partition, state, y);
        if (d == 0) continue;
        state += d;
        path.jump_times.push_back(t);
        path.post_states.push_back(state);
    }
    return path;
}

ChainPath simulate_chain_clock(const GeneratorMatrix& g, Regime r0, double horizon,
                               std::uint64_t seed) {
    if (r0 < 1 || r0 > g.states()) throw ConfigError("chain: initial state out of range");
    if (!(horizon > 0.0)) throw ConfigError("chain: horizon must be positive");

    ChainPath path;
    path.initial_state = r0;
    path.states = g.states();
    path.horizon = horizon;

    Rng rng(seed);
    Regime state = r0;
    double t = 0.0;
    while (true) {
        const double exit = g.exit_rate(state);
        if (exit <= 0.0) break;   // absorbing
        t += rng.exponential(exit);
        if (t > horizon) break;
        double u = rng.uniform01() * exit;
        Regime target = state;
        for (Regime j = 1; j <= g.states(); ++j) {
            if (j == state) continue;
            u -= g.rate(state, j);
            if (u <= 0.0) {
                target = j;
                break;
            }
        }
        if (target == state) {
            // float underrun on the last candidate; pick the last positive rate
            for (Regime j = g.states(); j >= 1; --j) {
                if (j != state && g.rate(state, j) > 0.0) {
                    target = j;
                    break;
                }
            }
        }
        state = target;
        path.jump_times.push_back(t);
        path.post_states.push_back(state);
    }
    return path;
}

OccupationStats occupation_stats(const ChainPath& path) {
    if (!(path.horizon > 0.0)) throw ConfigError("occupation_stats: empty path");

    int m = std::max(path.states, path.initial_state);
    for (Regime s : path.post_states) m = std::max(m, s);

    OccupationStats out;
    out.time_in_state.assign(m, 0.0);
    out.jump_count = path.jump_count();
    std::vector<std::vector<double>> jump_counts(m, std::vector<double>(m, 0.0));

    Regime state = path.initial_state;
    double prev = 0.0;
    for (std::size_t k = 0; k < path.jump_times.size(); ++k) {
        const double t = std::min(path.jump_times[k], path.horizon);
        out.time_in_state[state - 1] += t - prev;
        jump_counts[state - 1][path.post_states[k] - 1] += 1.0;
        state = path.post_states[k];
        prev = t;
    }
    out.time_in_state[state - 1] += path.horizon - prev;

    out.fractions.assign(m, 0.0);
    int fullest = 0;
    for (int i = 0; i < m; ++i) {
        out.fractions[i] = out.time_in_state[i] / path.horizon;
        if (out.time_in_state[i] > out.time_in_state[fullest]) fullest = i;
    }
    // Absorb float rounding into the dominant state so the sum is exactly 1.
    double others = 0.0;
    for (int i = 0; i < m; ++i)
        if (i != fullest) others += out.fractions[i];
    out.fractions[fullest] = 1.0 - others;

    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.rates.assign(m, std::vector<double>(m, 0.0));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            if (i == j) continue;
            out.rates[i][j] =
                (out.time_in_state[i] > 0.0) ? jump_counts[i][j] / out.time_in_state[i] : nan;
        }
    }
    return out;
}

ChainEquivalenceReport chain_equivalence(const GeneratorMatrix& g, Regime r0, double horizon,
                                         std::size_t n_paths, std::uint64_t seed) {
    if (n_paths < 2) throw ConfigError("chain_equivalence: need at least 2 paths");

    const int m = g.states();
    ChainEquivalenceReport report;
    report.paths_per_method = n_paths;

    std::vector<std::size_t> hist_prm, hist_clock;
    std::vector<double> occ_sum_prm(m, 0.0), occ_sumsq_prm(m, 0.0);
    std::vector<double> occ_sum_clock(m, 0.0), occ_sumsq_clock(m, 0.0);

    auto absorb = [&](const ChainPath& path, std::vector<std::size_t>& hist,
                      std::vector<double>& sum, std::vector<double>& sumsq) {
        const std::size_t jumps = path.jump_count();
        if (hist.size() <= jumps) hist.resize(jumps + 1, 0);
        ++hist[jumps];
        const OccupationStats occ = occupation_stats(path);
        for (int i = 0; i < m && i < static_cast<int>(occ.fractions.size()); ++i) {
            sum[i] += occ.fractions[i];
            sumsq[i] += occ.fractions[i] * occ.fractions[i];
        }
    };

    for (std::size_t k = 0; k < n_paths; ++k) {
        absorb(simulate_chain_prm(g, r0, horizon, Rng::derive(seed, rng_stream::kChain, 2 * k)),
               hist_prm, occ_sum_prm, occ_sumsq_prm);
        absorb(simulate_chain_clock(g, r0, horizon,
                                    Rng::derive(seed, rng_stream::kChain, 2 * k + 1)),
               hist_clock, occ_sum_clock, occ_sumsq_clock);
    }

    const std::size_t bins = std::max(hist_prm.size(), hist_clock.size());
    hist_prm.resize(bins, 0);
    hist_clock.resize(bins, 0);
    const auto chi2 = stats::chi2_homogeneity(hist_prm, hist_clock);
    report.chi2_statistic = chi2.statistic;
    report.chi2_dof = chi2.dof;
    report.chi2_p_value = chi2.p_value;

    const auto n = static_cast<double>(n_paths);
    for (int i = 0; i < m; ++i) {
        const double mean_p = occ_sum_prm[i] / n;
        const double mean_c = occ_sum_clock[i] / n;
        const double var_p = std::max(0.0, occ_sumsq_prm[i] / n - mean_p * mean_p) / (n - 1.0);
        const double var_c = std::max(0.0, occ_sumsq_clock[i] / n - mean_c * mean_c) / (n - 1.0);
        const double pooled_se = std::sqrt(var_p + var_c);
        report.occupation_prm.push_back(mean_p);
        report.occupation_clock.push_back(mean_c);
        report.occupation_z.push_back(pooled_se > 0.0 ? (mean_p - mean_c) / pooled_se : 0.0);
    }
    return report;
}

} // namespace snse
