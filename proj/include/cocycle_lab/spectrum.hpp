#pragma once

#include "cocycle_lab/cocycle.hpp"

namespace cocycle_lab {

/// Shift-invariant measure: Bernoulli over a full shift or a stationary
/// Markov chain supported exactly on the allowed transitions.
struct MeasureSpec {
    enum class Kind { bernoulli, markov };
    Kind kind = Kind::bernoulli;
    std::vector<double> probabilities;  // bernoulli
    RealMatrix transition_probs;        // markov, row-stochastic
    RealVector stationary;

    static MeasureSpec bernoulli(std::vector<double> probabilities);
    /// Stationary vector computed and checked internally.
    static MeasureSpec markov(RealMatrix row_stochastic);

    void validate(const ShiftSystem& system) const;
    /// Measure of the cylinder fixing `w` at consecutive coordinates.
    double cylinder_mass(const Word& w) const;
};

/// Exponent estimates from re-orthonormalized frame growth, with per-sample
/// spread converted into standard errors.
struct SpectrumEstimate {
    RealVector exponents;   // nonincreasing
    RealVector std_errors;  // sample sd / sqrt(n_samples)
    long n_iter = 0;
    int n_samples = 0;
    std::uint64_t seed = 0;
    RealMatrix per_sample;  // d x n_samples, each column sorted
};

/// Sample-averaged running estimates recorded along the iteration.
struct ConvergenceTrace {
    std::vector<long> iterations;
    RealMatrix running;  // checkpoints x d
};

enum class Execution { serial, parallel };

/// Monte-Carlo spectrum estimate: per sample, a stationary itinerary window
/// of length n_iter + 2*window_radius is drawn, the frame is pushed through
/// the cocycle with re-orthonormalization at every step, and the log-diagonal
/// growth is averaged.  Deterministic given the seed, independent of the
/// execution policy and thread count.
SpectrumEstimate estimate_spectrum(const Cocycle& a, const ShiftSystem& system,
                                   const MeasureSpec& mu, long n_iter, int n_samples,
                                   std::uint64_t seed, Execution exec = Execution::parallel,
                                   ConvergenceTrace* trace = nullptr);

struct MultiplicityReport {
    std::vector<std::vector<int>> blocks;  // index blocks of indistinguishable exponents
    bool simple = false;
};

/// Partition indices wherever the adjacent gap falls below
/// max(delta_gap, 3 * combined standard error); simple iff all singletons.
MultiplicityReport multiplicity_report(const SpectrumEstimate& est, double delta_gap);

/// E_mu[ log |det A| ], in closed form from the table and cylinder masses.
double expected_log_abs_det(const Cocycle& a, const ShiftSystem& system, const MeasureSpec& mu);

/// Cocycle over the induced full shift: the entry at return word J(l) is the
/// r(l)-step product of the base cocycle along the word.  Needs a window-0
/// base cocycle (deeper windows would reach across return-word boundaries).
Cocycle induced_cocycle(const Cocycle& a_t, const InducedSystem& induced);

/// Induced Bernoulli measure on the return alphabet: P(l) proportional to
/// the base mass of the return cylinder.  Reports the truncated tail.
struct InducedMeasure {
    MeasureSpec measure;          // Bernoulli over the return alphabet
    double missing_mass = 0.0;    // base-conditional mass of return times > R
    double expected_return = 0.0; // under the truncated, renormalized measure
    double base_cylinder_mass = 0.0;
};

InducedMeasure induced_measure(const InducedSystem& induced, const MeasureSpec& mu_t);

struct ScalingParams {
    long n_iter = 100'000;
    int n_samples = 8;
    std::uint64_t seed = 1;
    double max_missing_mass = 1e-3;
    double delta_gap = 0.0;
    Execution exec = Execution::parallel;
};

struct ScalingReport {
    double target = 0.0;  // 1 / mu([I])
    SpectrumEstimate base;
    SpectrumEstimate induced;
    std::vector<double> ratios;        // NaN where skipped
    std::vector<double> ratio_errors;  // 3-sigma budgets include kac_defect
    std::vector<bool> skipped;         // base exponent indistinguishable from 0
    double missing_mass = 0.0;
    double kac_defect = 0.0;  // |target - E_trunc[r]|, the truncation bias scale
    bool multiplicity_agree = false;
    bool pass = false;
    std::string notes;
};

/// Exponent rescaling under inducing: each base exponent is multiplied by
/// the expected return time 1/mu([I]).  Ratios are asserted within
/// 3 * propagated standard error plus the reported truncation defect;
/// multiplicity verdicts must coincide.
ScalingReport check_scaling(const Cocycle& a_t, const ShiftSystem& base_system,
                            const InducedSystem& induced, const MeasureSpec& mu_t,
                            const ScalingParams& params);

}  // namespace cocycle_lab
