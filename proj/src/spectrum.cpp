#include "cocycle_lab/spectrum.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cocycle_lab {

MeasureSpec MeasureSpec::bernoulli(std::vector<double> probabilities) {
    MeasureSpec m;
    m.kind = Kind::bernoulli;
    m.probabilities = std::move(probabilities);
    double sum = std::accumulate(m.probabilities.begin(), m.probabilities.end(), 0.0);
    // Induced alphabets renormalize hundreds of thousands of summands, so
    // the acceptance window scales with the count before exact division.
    double slack = std::max(1e-12, 8.0 * std::numeric_limits<double>::epsilon() *
                                       static_cast<double>(m.probabilities.size()));
    if (std::abs(sum - 1.0) > slack) throw Error("bernoulli probabilities must sum to 1");
    for (double p : m.probabilities)
        if (!(p > 0.0)) throw Error("bernoulli probabilities must be positive");
    for (double& p : m.probabilities) p /= sum;
    return m;
}

MeasureSpec MeasureSpec::markov(RealMatrix row_stochastic) {
    MeasureSpec m;
    m.kind = Kind::markov;
    m.transition_probs = std::move(row_stochastic);
    const int k = static_cast<int>(m.transition_probs.rows());
    if (m.transition_probs.cols() != k) throw Error("markov matrix must be square");
    for (int i = 0; i < k; ++i) {
        if (std::abs(m.transition_probs.row(i).sum() - 1.0) > 1e-12)
            throw Error("markov row " + std::to_string(i) + " does not sum to 1");
        for (int j = 0; j < k; ++j)
            if (m.transition_probs(i, j) < 0.0) throw Error("negative markov probability");
    }
    // Stationary vector by power iteration on the transpose.
    RealVector pi = RealVector::Constant(k, 1.0 / k);
    for (int it = 0; it < 20000; ++it) {
        RealVector next = m.transition_probs.transpose() * pi;
        next /= next.sum();
        double delta = (next - pi).cwiseAbs().maxCoeff();
        pi = next;
        if (delta < 1e-15) break;
    }
    m.stationary = pi;
    if ((m.transition_probs.transpose() * pi - pi).cwiseAbs().maxCoeff() > 1e-10)
        throw Error("markov chain has no well-separated stationary vector");
    return m;
}

void MeasureSpec::validate(const ShiftSystem& system) const {
    if (kind == Kind::bernoulli) {
        if (static_cast<int>(probabilities.size()) != system.alphabet_size)
            throw Error("measure/alphabet size mismatch");
        if (!system.full)
            throw Error("bernoulli measures need the full shift; use a markov measure");
        return;
    }
    if (static_cast<int>(transition_probs.rows()) != system.alphabet_size)
        throw Error("measure/alphabet size mismatch");
    for (int i = 0; i < system.alphabet_size; ++i)
        for (int j = 0; j < system.alphabet_size; ++j) {
            bool allowed = system.allows(i, j);
            bool charged = transition_probs(i, j) > 0.0;
            if (allowed != charged)
                throw Error("markov support must equal the allowed transitions (" +
                            std::to_string(i) + "->" + std::to_string(j) + ")");
        }
}

double MeasureSpec::cylinder_mass(const Word& w) const {
    if (w.empty()) return 1.0;
    if (kind == Kind::bernoulli) {
        double mass = 1.0;
        for (int s : w) mass *= probabilities.at(s);
        return mass;
    }
    double mass = stationary(w[0]);
    for (std::size_t i = 0; i + 1 < w.size(); ++i) mass *= transition_probs(w[i], w[i + 1]);
    return mass;
}

namespace {

struct DenseTable {
    int k = 0;
    int radius = 0;
    long span = 0;  // k^(2*radius+1)
    std::vector<const Matrix*> entries;
};

DenseTable densify(const Cocycle& a, const ShiftSystem& system) {
    DenseTable t;
    t.k = system.alphabet_size;
    t.radius = a.window_radius();
    long span = 1;
    for (int i = 0; i < 2 * t.radius + 1; ++i) {
        span *= t.k;
        if (span > 50'000'000) throw Error("window table too large to densify");
    }
    t.span = span;
    t.entries.assign(span, nullptr);
    for (const auto& [w, m] : a.table().entries) {
        long idx = 0;
        for (std::size_t i = 0; i < w.size(); ++i) idx = idx * t.k + w[i];
        t.entries[idx] = &m;
    }
    return t;
}

struct SamplerTables {
    std::vector<double> bernoulli_cdf;
    std::vector<double> stationary_cdf;
    std::vector<std::vector<double>> row_cdf;
};

SamplerTables make_sampler(const MeasureSpec& mu) {
    SamplerTables s;
    if (mu.kind == MeasureSpec::Kind::bernoulli) {
        double acc = 0.0;
        for (double p : mu.probabilities) s.bernoulli_cdf.push_back(acc += p);
        s.bernoulli_cdf.back() = 1.0;
        return s;
    }
    const int k = static_cast<int>(mu.transition_probs.rows());
    double acc = 0.0;
    for (int i = 0; i < k; ++i) s.stationary_cdf.push_back(acc += mu.stationary(i));
    s.stationary_cdf.back() = 1.0;
    s.row_cdf.resize(k);
    for (int i = 0; i < k; ++i) {
        double racc = 0.0;
        for (int j = 0; j < k; ++j) s.row_cdf[i].push_back(racc += mu.transition_probs(i, j));
        s.row_cdf[i].back() = 1.0;
    }
    return s;
}

void sample_itinerary(const MeasureSpec& mu, const SamplerTables& tables, long length, Rng& rng,
                      std::vector<int>& out) {
    out.resize(length);
    if (mu.kind == MeasureSpec::Kind::bernoulli) {
        for (long i = 0; i < length; ++i) out[i] = rng.categorical(tables.bernoulli_cdf);
        return;
    }
    // Stationary start at the leftmost coordinate, then the forward chain;
    // stationarity makes this the two-sided law restricted to the window.
    out[0] = rng.categorical(tables.stationary_cdf);
    for (long i = 1; i < length; ++i) out[i] = rng.categorical(tables.row_cdf[out[i - 1]]);
}

/// One sample: modified Gram-Schmidt on the pushed frame at every step,
/// log-diagonal accumulation, optional running checkpoints.
void run_sample(int d, const DenseTable& table, const MeasureSpec& mu,
                const SamplerTables& sampler, long n_iter, std::uint64_t sample_seed,
                RealVector& exponents, const std::vector<long>& checkpoints,
                RealMatrix* running) {
    Rng rng(sample_seed);
    std::vector<int> symbols;
    sample_itinerary(mu, sampler, n_iter + 2 * table.radius, rng, symbols);

    Matrix q = Matrix::Identity(d, d);
    Matrix v(d, d);
    RealVector logs = RealVector::Zero(d);
    std::size_t next_checkpoint = 0;

    for (long t = 0; t < n_iter; ++t) {
        long idx = 0;
        for (int i = 0; i < 2 * table.radius + 1; ++i) idx = idx * table.k + symbols[t + i];
        const Matrix* m = table.entries[idx];
        if (!m) throw Error("sampled an itinerary word absent from the table");
        v.noalias() = (*m) * q;
        for (int c = 0; c < d; ++c) {
            for (int j = 0; j < c; ++j) {
                Complex proj = q.col(j).dot(v.col(c));
                v.col(c).noalias() -= proj * q.col(j);
            }
            double norm = v.col(c).norm();
            logs(c) += std::log(norm);
            q.col(c) = v.col(c) / norm;
        }
        if (running && next_checkpoint < checkpoints.size() &&
            t + 1 == checkpoints[next_checkpoint]) {
            for (int c = 0; c < d; ++c)
                (*running)(static_cast<long>(next_checkpoint), c) =
                    logs(c) / static_cast<double>(t + 1);
            ++next_checkpoint;
        }
    }
    exponents = logs / static_cast<double>(n_iter);
    std::sort(exponents.data(), exponents.data() + d, std::greater<double>());
}

}  // namespace

SpectrumEstimate estimate_spectrum(const Cocycle& a, const ShiftSystem& system,
                                   const MeasureSpec& mu, long n_iter, int n_samples,
                                   std::uint64_t seed, Execution exec, ConvergenceTrace* trace) {
    if (!a.is_finite_window())
        throw Error("estimate_spectrum needs a finite-window cocycle");
    if (n_iter < 1000) throw Error("estimate_spectrum: n_iter must be at least 1000");
    if (n_samples < 1) throw Error("estimate_spectrum: n_samples must be positive");
    mu.validate(system);

    const int d = a.dimension();
    DenseTable table = densify(a, system);
    SamplerTables sampler = make_sampler(mu);

    std::vector<long> checkpoints;
    if (trace) {
        const int points = 200;
        for (int i = 1; i <= points; ++i) {
            long it = n_iter * static_cast<long>(i) / points;
            if (checkpoints.empty() || it > checkpoints.back()) checkpoints.push_back(it);
        }
    }

    RealMatrix per_sample(d, n_samples);
    std::vector<RealMatrix> runnings;
    if (trace)
        runnings.assign(n_samples,
                        RealMatrix::Zero(static_cast<long>(checkpoints.size()), d));

    auto work = [&](int s) {
        RealVector exps(d);
        run_sample(d, table, mu, sampler, n_iter, derive_seed(seed, s), exps, checkpoints,
                   trace ? &runnings[s] : nullptr);
        per_sample.col(s) = exps;
    };

#ifdef _OPENMP
    if (exec == Execution::parallel) {
        int threads = thread_cap() > 0 ? std::min(thread_cap(), omp_get_max_threads())
                                       : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (int s = 0; s < n_samples; ++s) work(s);
    } else {
        for (int s = 0; s < n_samples; ++s) work(s);
    }
#else
    (void)exec;
    for (int s = 0; s < n_samples; ++s) work(s);
#endif

    SpectrumEstimate est;
    est.n_iter = n_iter;
    est.n_samples = n_samples;
    est.seed = seed;
    est.per_sample = per_sample;
    est.exponents = per_sample.rowwise().mean();
    est.std_errors = RealVector::Zero(d);
    if (n_samples > 1) {
        for (int i = 0; i < d; ++i) {
            double mean = est.exponents(i);
            double acc = 0.0;
            for (int s = 0; s < n_samples; ++s)
                acc += (per_sample(i, s) - mean) * (per_sample(i, s) - mean);
            est.std_errors(i) = std::sqrt(acc / (n_samples - 1)) / std::sqrt(double(n_samples));
        }
    }
    // Fixed-order reduction of the trace: deterministic for any thread count.
    if (trace) {
        trace->iterations = checkpoints;
        trace->running = RealMatrix::Zero(static_cast<long>(checkpoints.size()), d);
        for (int s = 0; s < n_samples; ++s) trace->running += runnings[s];
        trace->running /= static_cast<double>(n_samples);
    }
    return est;
}

MultiplicityReport multiplicity_report(const SpectrumEstimate& est, double delta_gap) {
    MultiplicityReport rep;
    const int d = static_cast<int>(est.exponents.size());
    std::vector<int> block{0};
    for (int i = 0; i + 1 < d; ++i) {
        double gap = est.exponents(i) - est.exponents(i + 1);
        double resolution = 3.0 * std::sqrt(est.std_errors(i) * est.std_errors(i) +
                                            est.std_errors(i + 1) * est.std_errors(i + 1));
        if (gap < std::max(delta_gap, resolution)) {
            block.push_back(i + 1);
        } else {
            rep.blocks.push_back(block);
            block = {i + 1};
        }
    }
    rep.blocks.push_back(block);
    rep.simple = true;
    for (const auto& b : rep.blocks)
        if (b.size() > 1) rep.simple = false;
    return rep;
}

double expected_log_abs_det(const Cocycle& a, const ShiftSystem& system, const MeasureSpec& mu) {
    mu.validate(system);
    double acc = 0.0;
    double mass_total = 0.0;
    for (const auto& [w, m] : a.table().entries) {
        double mass = mu.cylinder_mass(w);
        acc += mass * std::log(std::abs(m.determinant()));
        mass_total += mass;
    }
    if (std::abs(mass_total - 1.0) > 1e-9)
        throw Error("table cylinders do not cover the space (mass " +
                    std::to_string(mass_total) + ")");
    return acc;
}

Cocycle induced_cocycle(const Cocycle& a_t, const InducedSystem& induced) {
    if (!a_t.is_finite_window() || a_t.window_radius() != 0)
        throw Error("induced_cocycle needs a window-0 base cocycle: the return word fixes "
                    "exactly the coordinates its product reads");
    WindowTable table;
    table.radius = 0;
    for (std::size_t l = 0; l < induced.words.size(); ++l) {
        const auto& rw = induced.words[l];
        Matrix acc = a_t.table().at({rw.symbols[0]});
        for (long j = 1; j < rw.return_time; ++j)
            acc = a_t.table().at({rw.symbols[j]}) * acc;
        table.entries[{static_cast<int>(l)}] = std::move(acc);
    }
    return Cocycle::finite_window(a_t.dimension(), a_t.field(), std::move(table), a_t.eta());
}

InducedMeasure induced_measure(const InducedSystem& induced, const MeasureSpec& mu_t) {
    InducedMeasure out;
    out.base_cylinder_mass = mu_t.cylinder_mass(induced.base_cylinder);
    double covered = 0.0;
    std::vector<double> probs(induced.words.size());
    for (std::size_t l = 0; l < induced.words.size(); ++l) {
        double mass = mu_t.cylinder_mass(induced.full_cylinder_word(l));
        probs[l] = mass / out.base_cylinder_mass;
        covered += probs[l];
    }
    out.missing_mass = std::max(0.0, 1.0 - covered);
    for (auto& p : probs) p /= covered;
    double er = 0.0;
    for (std::size_t l = 0; l < induced.words.size(); ++l)
        er += probs[l] * static_cast<double>(induced.words[l].return_time);
    out.expected_return = er;
    out.measure = MeasureSpec::bernoulli(std::move(probs));
    return out;
}

ScalingReport check_scaling(const Cocycle& a_t, const ShiftSystem& base_system,
                            const InducedSystem& induced, const MeasureSpec& mu_t,
                            const ScalingParams& params) {
    ScalingReport rep;
    InducedMeasure im = induced_measure(induced, mu_t);
    rep.target = 1.0 / im.base_cylinder_mass;
    rep.missing_mass = im.missing_mass;
    rep.kac_defect = std::abs(rep.target - im.expected_return);

    if (im.missing_mass >= params.max_missing_mass) {
        rep.pass = false;
        rep.notes = "missing return-time mass " + std::to_string(im.missing_mass) +
                    " exceeds the budget; raise the truncation horizon";
        return rep;
    }

    rep.base = estimate_spectrum(a_t, base_system, mu_t, params.n_iter, params.n_samples,
                                 params.seed, params.exec);
    Cocycle ind = induced_cocycle(a_t, induced);
    ShiftSystem ind_system =
        ShiftSystem::full_shift(static_cast<int>(induced.words.size()), base_system.theta);
    rep.induced = estimate_spectrum(ind, ind_system, im.measure, params.n_iter,
                                    params.n_samples, derive_seed(params.seed, 0x1d), params.exec);

    const int d = static_cast<int>(rep.base.exponents.size());
    rep.ratios.assign(d, std::nan(""));
    rep.ratio_errors.assign(d, 0.0);
    rep.skipped.assign(d, false);
    double max_abs = rep.base.exponents.cwiseAbs().maxCoeff();
    bool ratios_ok = true;
    for (int i = 0; i < d; ++i) {
        double lt = rep.base.exponents(i), st = rep.base.std_errors(i);
        double li = rep.induced.exponents(i), si = rep.induced.std_errors(i);
        if (std::abs(lt) <= 3.0 * st + 1e-12) {
            rep.skipped[i] = true;
            rep.notes += "exponent " + std::to_string(i) +
                         " indistinguishable from 0; ratio skipped. ";
            continue;
        }
        double ratio = li / lt;
        // Delta-method spread plus the truncation defect, scaled by how much
        // larger the dominating exponent is than this one.
        double sigma =
            std::abs(ratio) * std::sqrt(st * st / (lt * lt) + si * si / (li * li + 1e-300));
        double budget =
            3.0 * sigma + rep.kac_defect * std::max(1.0, max_abs / std::abs(lt));
        rep.ratios[i] = ratio;
        rep.ratio_errors[i] = budget;
        if (std::abs(ratio - rep.target) > budget) ratios_ok = false;
    }

    MultiplicityReport mb = multiplicity_report(rep.base, params.delta_gap);
    MultiplicityReport mi = multiplicity_report(rep.induced, params.delta_gap);
    rep.multiplicity_agree = mb.blocks == mi.blocks;
    rep.pass = ratios_ok && rep.multiplicity_agree;
    return rep;
}

}  // namespace cocycle_lab
