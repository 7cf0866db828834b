#pragma once

#include "snse/rng.hpp"

#include <cstdint>
#include <vector>

namespace snse {

/// Regimes are labelled 1..m throughout, matching the chain's state space.
using Regime = int;

/// Generator of a continuous-time Markov chain: off-diagonal rates are
/// nonnegative and each diagonal entry is minus its row's off-diagonal sum,
/// computed at construction so rows sum to zero exactly.
class GeneratorMatrix {
public:
    /// `off_rates` is m x m row-major; diagonal entries are ignored.
    static GeneratorMatrix from_rates(int m, const std::vector<double>& off_rates);

    int states() const { return m_; }
    double rate(Regime i, Regime j) const { return gamma_[idx(i, j)]; }
    double exit_rate(Regime i) const { return -rate(i, i); }
    double total_rate() const;   // sum of all off-diagonal entries

private:
    GeneratorMatrix(int m, std::vector<double> gamma) : m_(m), gamma_(std::move(gamma)) {}
    std::size_t idx(Regime i, Regime j) const {
        return static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(m_) +
               static_cast<std::size_t>(j - 1);
    }
    int m_;
    std::vector<double> gamma_;   // full matrix including diagonal
};

/// Consecutive half-open intervals of the real line, one per ordered pair
/// (i, j), i != j, with the interval for (i, j) having length gamma_ij.
struct IntervalPartition {
    struct Interval {
        Regime source;
        Regime target;
        double left;
        double right;    // half-open [left, right)
        double length;   // the rate gamma_ij, stored exactly
    };
    std::vector<Interval> intervals;
    double total_length = 0.0;
};

IntervalPartition build_partition(const GeneratorMatrix& g);

/// Displacement j - i if y lies in the interval for (i, j), else 0.
int jump_displacement(const IntervalPartition& partition, Regime i, double y);

/// Right-continuous piecewise-constant trajectory of the chain.
struct ChainPath {
    Regime initial_state = 1;
    int states = 1;   // size of the state space the path lives in
    double horizon = 0.0;
    std::vector<double> jump_times;     // strictly increasing, in (0, horizon]
    std::vector<Regime> post_states;    // state after each jump

    Regime state_at(double t) const;
    std::size_t jump_count() const { return jump_times.size(); }

    static ChainPath constant(Regime state, double horizon) {
        return ChainPath{state, state, horizon, {}, {}};
    }
};

/// Chain simulation by thinning a planar unit-rate Poisson random measure
/// on [0, T] x [0, total_length) through the interval partition.
ChainPath simulate_chain_prm(const GeneratorMatrix& g, Regime r0, double horizon,
                             std::uint64_t seed);

/// Independent oracle: exponential holding times with rate -gamma_ii and
/// categorical jump targets. An absorbing state holds forever.
ChainPath simulate_chain_clock(const GeneratorMatrix& g, Regime r0, double horizon,
                               std::uint64_t seed);

struct OccupationStats {
    std::vector<double> fractions;            // per state, sums to 1
    std::vector<std::vector<double>> rates;   // empirical i->j rates; NaN = undefined
    std::vector<double> time_in_state;
    std::size_t jump_count = 0;
};

OccupationStats occupation_stats(const ChainPath& path);

/// Distributional comparison of the two simulators: pooled jump-count
/// histograms (chi-square homogeneity) plus per-state occupation gaps in
/// pooled standard errors.
struct ChainEquivalenceReport {
    double chi2_statistic = 0.0;
    double chi2_dof = 0.0;
    double chi2_p_value = 1.0;
    std::vector<double> occupation_prm;
    std::vector<double> occupation_clock;
    std::vector<double> occupation_z;   // gap / pooled se
    std::size_t paths_per_method = 0;
};

ChainEquivalenceReport chain_equivalence(const GeneratorMatrix& g, Regime r0, double horizon,
                                         std::size_t n_paths, std::uint64_t seed);

} // namespace snse
