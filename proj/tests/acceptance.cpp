// Acceptance suite: one line per criterion, every tolerance pinned in code.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "cocycle_lab/perturbation.hpp"
#include "cocycle_lab/scenario.hpp"
#include "cocycle_lab/spectrum.hpp"
#include "test_support.hpp"

using namespace cocycle_lab;
using namespace cocycle_lab::testing;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

struct Criterion {
    std::string name;
    Clock::time_point start = Clock::now();
    double time_budget_s;
    bool ok = true;
    std::ostringstream detail;

    Criterion(std::string n, double budget) : name(std::move(n)), time_budget_s(budget) {}

    void require(bool condition, const std::string& what) {
        if (!condition) {
            ok = false;
            detail << (detail.tellp() > 0 ? "; " : "") << what;
        }
    }

    void finish() {
        double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
        if (elapsed > time_budget_s) {
            ok = false;
            detail << (detail.tellp() > 0 ? "; " : "") << "runtime " << elapsed
                   << " s exceeds budget " << time_budget_s << " s";
        }
        std::printf("%s %s (%.2f s)%s%s\n", ok ? "PASS" : "FAIL", name.c_str(), elapsed,
                    detail.tellp() > 0 ? ": " : "", detail.str().c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
};

const ShiftSystem kFull = ShiftSystem::full_shift(2);
const MeasureSpec kHalf = MeasureSpec::bernoulli({0.5, 0.5});

Matrix diag2(double a, double b) {
    Matrix m(2, 2);
    m << a, 0, 0, b;
    return m;
}

Cocycle constant2(const Matrix& m, ScalarField field = ScalarField::complex) {
    WindowTable t;
    t.radius = 0;
    t.entries[{0}] = m;
    t.entries[{1}] = m;
    return Cocycle::finite_window(2, field, std::move(t));
}

Cocycle long_range_family() {
    LongRangeFamily fam;
    fam.m0 = diag2(1.15, 0.95);
    fam.m1 = rotation2(0.3) * diag2(1.05, 1.0);
    return make_long_range_cocycle(kFull, fam);
}

/// Five certified-simple test cocycles (three d=2, two d=3) with their
/// shift systems and witnesses.
struct SimpleCase {
    std::string label;
    Cocycle cocycle;
    HomoclinicData witness;
    bool real_mode;
};

std::vector<SimpleCase> simple_cases() {
    std::vector<SimpleCase> cases;
    HomoclinicData w01 = make_homoclinic(make_periodic({0}, kFull), {1}, kFull);

    cases.push_back({"d2-standard", standard_test_cocycle(), w01, false});

    {
        Matrix a1(2, 2);
        a1 << 0.9, 0.4, -0.4, 0.9;
        WindowTable t;
        t.radius = 0;
        t.entries[{0}] = diag2(1.3, 0.8);
        t.entries[{1}] = a1;
        cases.push_back({"d2-real", Cocycle::finite_window(2, ScalarField::real, std::move(t)),
                         w01, true});
    }
    {
        Rng rng(2026);
        cases.push_back({"d2-window1", random_cocycle(kFull, 2, 1, ScalarField::complex, rng),
                         w01, false});
    }
    // A fully mixing rotation: a product of only two plane rotations keeps a
    // structural zero in a corner, which makes one subspace pair exactly
    // degenerate (psi maps an eigenline into a coordinate plane).  Compose
    // all three planes.
    auto full_rotation3 = [](double t12, double t23, double t13) {
        Matrix r12 = Matrix::Identity(3, 3), r23 = Matrix::Identity(3, 3),
               r13 = Matrix::Identity(3, 3);
        r12.block<2, 2>(0, 0) = rotation2(t12);
        r23.block<2, 2>(1, 1) = rotation2(t23);
        Matrix p = rotation2(t13);
        r13(0, 0) = p(0, 0);
        r13(0, 2) = p(0, 1);
        r13(2, 0) = p(1, 0);
        r13(2, 2) = p(1, 1);
        return Matrix(r12 * r23 * r13);
    };
    {
        // Condition numbers must stay below 1/theta = 2 for fiber bunching.
        Matrix a0 = Matrix::Zero(3, 3);
        a0.diagonal() << 1.35, 1.0, 0.75;
        Matrix d1 = Matrix::Zero(3, 3);
        d1.diagonal() << 1.15, 1.0, 0.88;
        WindowTable t;
        t.radius = 0;
        t.entries[{0}] = a0;
        t.entries[{1}] = full_rotation3(0.35, 0.45, 0.55) * d1;
        cases.push_back({"d3-mixing", Cocycle::finite_window(3, ScalarField::complex, std::move(t)),
                         w01, false});
    }
    {
        Matrix a0 = Matrix::Zero(3, 3);
        a0.diagonal() << 1.3, 1.0, 0.78;
        Matrix d1 = Matrix::Zero(3, 3);
        d1.diagonal() << 1.1, 1.0, 0.9;
        WindowTable t;
        t.radius = 0;
        t.entries[{0}] = a0;
        t.entries[{1}] = full_rotation3(0.3, 0.4, 0.5) * d1;
        cases.push_back({"d3-rotated", Cocycle::finite_window(3, ScalarField::complex, std::move(t)),
                         w01, false});
    }
    return cases;
}

bool gaps_exceed_3se(const SpectrumEstimate& est, std::ostringstream& why,
                     const std::string& label) {
    bool ok = true;
    for (long i = 0; i + 1 < est.exponents.size(); ++i) {
        double gap = est.exponents(i) - est.exponents(i + 1);
        double combined = 3.0 * std::sqrt(est.std_errors(i) * est.std_errors(i) +
                                          est.std_errors(i + 1) * est.std_errors(i + 1));
        if (!(gap > combined)) {
            ok = false;
            why << label << " gap " << i << " = " << gap << " <= 3se " << combined << "; ";
        }
    }
    return ok;
}

// --------------------------------------------------------------------------

void criterion_1_holonomy_identities() {
    Criterion c("criterion-1 holonomy-identity-suite", 10.0);
    Rng rng(101);
    Cocycle w1 = random_cocycle(kFull, 2, 1, ScalarField::complex, rng);
    std::vector<std::pair<Cocycle, BunchingCertificate>> exact_cocycles;
    for (const Cocycle& a : {standard_test_cocycle(), w1})
        exact_cocycles.push_back({a, certify_bunching(a, kFull)});

    const Matrix id2 = Matrix::Identity(2, 2);
    int stable_checked = 0, unstable_checked = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto& [a, cert] = exact_cocycles[trial % 2];
        // Stable triple plus equivariance.
        {
            SymbolicPoint x = random_point(rng, 2);
            SymbolicPoint y = stable_companion(x, rng);
            SymbolicPoint z = stable_companion(x, rng);
            long j = 1 + static_cast<long>(rng.uniform(0.0, 8.0));
            auto rep = holonomy_identities_check(a, cert, x, y, z, j);
            worst = std::max({worst, rep.composition_residual, rep.inverse_residual});
            c.require(rep.composition_residual <= 1e-10, "stable composition residual");
            c.require(rep.inverse_residual <= 1e-10, "stable inverse residual");
            c.require(rep.equivariance_residual <=
                          1e-10 * (1.0 + a.product(x, j).norm() + a.product(y, j).norm()),
                      "stable equivariance residual");
            ++stable_checked;
        }
        // Unstable triple plus equivariance (dual identities, checked inline).
        {
            SymbolicPoint x = random_point(rng, 2);
            SymbolicPoint y = unstable_companion(x, rng);
            SymbolicPoint z = unstable_companion(x, rng);
            Matrix hxy = unstable_holonomy(a, cert, x, y).value;
            Matrix hzy = unstable_holonomy(a, cert, z, y).value;
            Matrix hxz = unstable_holonomy(a, cert, x, z).value;
            Matrix hyx = unstable_holonomy(a, cert, y, x).value;
            c.require((hxy - hzy * hxz).norm() <= 1e-10, "unstable composition residual");
            c.require((hyx * hxy - id2).norm() <= 1e-10, "unstable inverse residual");
            long j = 1 + static_cast<long>(rng.uniform(0.0, 8.0));
            Matrix shifted = unstable_holonomy(a, cert, x.shifted(-j), y.shifted(-j)).value;
            Matrix ax = a.product(x, -j), ay = a.product(y, -j);
            Matrix transported = ay * hxy * ax.inverse();
            c.require((shifted - transported).norm() <=
                          1e-10 * (1.0 + ax.norm() + ay.norm() + transported.norm()),
                      "unstable equivariance residual");
            ++unstable_checked;
        }
    }
    c.require(stable_checked + unstable_checked == 200, "200 randomized pairs");

    // Long-range paths: residuals within 3x the summed certified bounds.
    Cocycle lr = long_range_family();
    BunchingCertificate lcert = certify_bunching(lr, kFull);
    for (int trial = 0; trial < 10; ++trial) {
        SymbolicPoint x = random_point(rng, 2);
        SymbolicPoint y = stable_companion(x, rng);
        SymbolicPoint z = stable_companion(x, rng);
        auto rep = holonomy_identities_check(lr, lcert, x, y, z, 2, 1e-9);
        c.require(rep.composition_residual <= 3.0 * rep.budget, "long-range composition");
        c.require(rep.inverse_residual <= 3.0 * rep.budget, "long-range inverse");
        c.require(rep.equivariance_residual <= 3.0 * rep.budget, "long-range equivariance");
    }
    c.detail << "worst exact residual " << worst;
    c.finish();
}

void criterion_2_cauchy_rate() {
    Criterion c("criterion-2 cauchy-rate-audit", 5.0);
    Cocycle a = long_range_family();
    BunchingCertificate cert = certify_bunching(a, kFull);
    Rng rng(202);
    int audited = 0;
    for (int trial = 0; trial < 6; ++trial) {
        SymbolicPoint x = random_point(rng, 2);
        SymbolicPoint y = stable_companion(x, rng);
        double dist = distance(x, y, kFull.theta);
        if (dist == 0.0) continue;
        Matrix prev = Matrix::Identity(2, 2);
        for (long n = 0; n <= 40; ++n) {
            Matrix h_next;
            {
                // H^{n+1} via fresh products to keep the audit independent.
                Matrix qx = Matrix::Identity(2, 2), qy = qx;
                for (long j = 0; j <= n; ++j) {
                    qx = a.evaluate(x.shifted(j)) * qx;
                    qy = a.evaluate(y.shifted(j)) * qy;
                }
                h_next = qy.inverse() * qx;
            }
            double increment = spectral_norm(h_next - prev);
            double bound = cert.chain_constant * cert.comparison_constant *
                           std::pow(cert.tau, static_cast<double>(n)) *
                           std::pow(dist, cert.eta);
            c.require(increment <= bound * (1.0 + 1e-9) + 1e-15,
                      "increment bound at n=" + std::to_string(n));
            prev = h_next;
        }
        ++audited;
    }
    c.require(audited >= 4, "enough distinct stable pairs audited");
    c.finish();
}

void criterion_3_derivatives() {
    Criterion c("criterion-3 derivative-correctness", 30.0);
    Rng rng(303);
    Cocycle a = random_cocycle(kFull, 2, 1, ScalarField::complex, rng);
    BunchingCertificate cert = certify_bunching(a, kFull);
    Tangent t = random_tangent(kFull, 2, 1, ScalarField::complex, rng);

    auto fd = [&](bool stable, const SymbolicPoint& x, const SymbolicPoint& y, double h) {
        Cocycle plus = apply_tangent(a, t, h, kFull);
        Cocycle minus = apply_tangent(a, t, -h, kFull);
        BunchingCertificate cp = certify_bunching(plus, kFull);
        BunchingCertificate cm = certify_bunching(minus, kFull);
        Matrix hp = stable ? stable_holonomy(plus, cp, x, y).value
                           : unstable_holonomy(plus, cp, x, y).value;
        Matrix hm = stable ? stable_holonomy(minus, cm, x, y).value
                           : unstable_holonomy(minus, cm, x, y).value;
        return Matrix((hp - hm) / (2.0 * h));
    };

    int slope_count = 0, checked = 0;
    for (int trial = 0; trial < 40 && (slope_count < 8 || checked < 20); ++trial) {
        bool stable = trial % 2 == 0;
        SymbolicPoint x = random_point(rng, 2);
        SymbolicPoint y = stable ? stable_companion(x, rng) : unstable_companion(x, rng);
        if (x == y) continue;
        Matrix analytic =
            stable ? stable_holonomy_derivative(a, cert, t, kFull, x, y)
                   : unstable_holonomy_derivative(a, cert, t, kFull, x, y);
        Matrix fd5 = fd(stable, x, y, 1e-5);
        double rel = (analytic - fd5).norm() / std::max(1.0, fd5.norm());
        c.require(rel <= 1e-4, "analytic vs h=1e-5 central difference");
        ++checked;

        double e3 = (fd(stable, x, y, 1e-3) - analytic).norm();
        double e4 = (fd(stable, x, y, 1e-4) - analytic).norm();
        double e5 = (analytic - fd5).norm();
        if (e3 < 1e-7) continue;  // curvature below the h-noise floor
        // Least-squares slope across h in {1e-3, 1e-4, 1e-5}.
        double lx[3] = {-3, -4, -5};
        double ly[3] = {std::log10(e3), std::log10(e4), std::log10(std::max(e5, 1e-300))};
        double mx = (lx[0] + lx[1] + lx[2]) / 3, my = (ly[0] + ly[1] + ly[2]) / 3;
        double slope = ((lx[0] - mx) * (ly[0] - my) + (lx[1] - mx) * (ly[1] - my) +
                        (lx[2] - mx) * (ly[2] - my)) /
                       ((lx[0] - mx) * (lx[0] - mx) + (lx[1] - mx) * (lx[1] - mx) +
                        (lx[2] - mx) * (lx[2] - mx));
        c.require(slope > 1.7 && slope < 2.3,
                  "log-log slope " + std::to_string(slope) + " outside 2 +/- 0.3");
        ++slope_count;
    }
    c.require(checked >= 20, "20 random derivative instances");
    c.require(slope_count >= 8, "enough measurable slope instances");
    c.detail << checked << " instances, " << slope_count << " slopes";
    c.finish();
}

void criterion_4_simple_spectra() {
    Criterion c("criterion-4 simplicity-implies-spectral-gaps", 120.0);
    for (const auto& sc : simple_cases()) {
        SimplicityCertificate cert =
            certify_simple(sc.cocycle, kFull, sc.witness, kDefaultDeltaPinch,
                           kDefaultDeltaTwist, 1e-9, sc.real_mode);
        c.require(cert.verdict == Verdict::simple, sc.label + " certified simple");
        SpectrumEstimate est =
            estimate_spectrum(sc.cocycle, kFull, kHalf, 100000, 16, 404);
        std::ostringstream why;
        bool ok = gaps_exceed_3se(est, why, sc.label);
        c.require(ok, why.str());
    }
    c.finish();
}

void criterion_5_make_simple_contract() {
    Criterion c("criterion-5 make-simple-contract", 120.0);
    Cocycle rot = constant2(rotation2(0.3));
    {
        SimplicityCertificate before = certify_simple(
            rot, kFull, make_homoclinic(make_periodic({0}, kFull), {1}, kFull));
        c.require(before.verdict == Verdict::not_pinching, "rotation starts non-simple");
    }
    MakeSimpleResult res = make_simple(rot, kFull, 0.05, kDefaultDeltaPinch,
                                       kDefaultDeltaTwist, /*seed=*/505);
    c.require(res.certificate.verdict == Verdict::simple, "output certified simple");
    c.require(res.total_change <= 0.05,
              "total entry change " + std::to_string(res.total_change) + " <= 0.05");
    bool bunched = true;
    try {
        certify_bunching(res.cocycle, kFull);
    } catch (const NotFiberBunched&) {
        bunched = false;
    }
    c.require(bunched, "fiber bunching re-certified");

    SpectrumEstimate est = estimate_spectrum(res.cocycle, kFull, kHalf, 100000, 16, 505);
    std::ostringstream why;
    c.require(gaps_exceed_3se(est, why, "repaired"), why.str());
    c.detail << "total change " << res.total_change << ", gap "
             << est.exponents(0) - est.exponents(1);
    c.finish();
}

void criterion_6_rank_probe() {
    Criterion c("criterion-6 submersion-rank-probe", 60.0);
    Cocycle a = standard_test_cocycle();
    BunchingCertificate cert = certify_bunching(a, kFull);
    HomoclinicData s1 = make_homoclinic(make_periodic({0}, kFull), {1}, kFull);
    HomoclinicData s2 = make_homoclinic(make_periodic({1}, kFull), {0}, kFull);

    RankProbeReport one = submersion_rank_probe(a, kFull, cert, {s1}, 8, 1e-5, 606);
    c.require(one.rank == 8, "l=1 rank " + std::to_string(one.rank) + " == 2 d^2 = 8");
    c.require(one.full_rank, "l=1 full rank at threshold h^1.5");
    c.require(one.max_analytic_discrepancy <= 1e-4,
              "l=1 analytic column check " + std::to_string(one.max_analytic_discrepancy));

    RankProbeReport two = submersion_rank_probe(a, kFull, cert, {s1, s2}, 16, 1e-5, 606);
    c.require(two.rank == 16, "l=2 rank " + std::to_string(two.rank) + " == 2 l d^2 = 16");
    c.require(two.full_rank, "l=2 full rank at threshold h^1.5");
    c.require(two.max_analytic_discrepancy <= 1e-4,
              "l=2 analytic column check " + std::to_string(two.max_analytic_discrepancy));
    c.detail << "sigma_min l=1 " << one.singular_values(one.singular_values.size() - 1)
             << ", l=2 " << two.singular_values(two.singular_values.size() - 1);
    c.finish();
}

void criterion_7_induced_scaling() {
    Criterion c("criterion-7 induced-exponent-scaling", 180.0);
    Cocycle a = constant2(diag2(2.0, 0.5));
    {
        InducedSystem ind = induce(kFull, {0}, 20);
        ScalingParams params;
        params.n_iter = 100000;
        params.n_samples = 8;
        params.seed = 707;
        ScalingReport rep = check_scaling(a, kFull, ind, kHalf, params);
        c.require(rep.missing_mass < 1e-3, "base-0 truncation mass < 1e-3");
        c.require(rep.pass, "base-0 ratios and multiplicities");
        for (std::size_t i = 0; i < rep.ratios.size(); ++i)
            c.require(!rep.skipped[i] && std::abs(rep.ratios[i] - 2.0) <= rep.ratio_errors[i],
                      "base-0 ratio " + std::to_string(i));
        c.detail << "base-0 ratios " << rep.ratios[0] << ", " << rep.ratios[1];
    }
    {
        InducedSystem ind = induce(kFull, {0, 0}, 32);
        ScalingParams params;
        params.n_iter = 100000;
        params.n_samples = 8;
        params.seed = 708;
        ScalingReport rep = check_scaling(a, kFull, ind, kHalf, params);
        c.require(rep.missing_mass < 1e-3, "base-00 truncation mass < 1e-3");
        c.require(rep.pass, "base-00 ratios and multiplicities");
        for (std::size_t i = 0; i < rep.ratios.size(); ++i)
            c.require(!rep.skipped[i] && std::abs(rep.ratios[i] - 4.0) <= rep.ratio_errors[i],
                      "base-00 ratio " + std::to_string(i));
        c.detail << "; base-00 ratios " << rep.ratios[0] << ", " << rep.ratios[1]
                 << " (defect " << rep.kac_defect << ")";
    }
    c.finish();
}

void criterion_8_closed_form_oracle() {
    Criterion c("criterion-8 closed-form-spectrum-oracle", 60.0);
    {
        double a = 1.4, b = 0.7, cc = 0.9, e = 1.1;
        WindowTable t;
        t.radius = 0;
        t.entries[{0}] = diag2(a, b);
        t.entries[{1}] = diag2(cc, e);
        Cocycle diag = Cocycle::finite_window(2, ScalarField::complex, std::move(t));
        SpectrumEstimate est = estimate_spectrum(diag, kFull, kHalf, 50000, 16, 808);
        std::vector<double> expected{(std::log(a) + std::log(cc)) / 2,
                                     (std::log(b) + std::log(e)) / 2};
        std::sort(expected.begin(), expected.end(), std::greater<double>());
        for (int i = 0; i < 2; ++i)
            c.require(std::abs(est.exponents(i) - expected[i]) <=
                          3.0 * est.std_errors(i) + 1e-12,
                      "diagonal closed form, exponent " + std::to_string(i));
    }
    // Sum rule on the standard cocycles.
    Rng rng(809);
    for (const auto& sc : simple_cases()) {
        SpectrumEstimate est = estimate_spectrum(sc.cocycle, kFull, kHalf, 20000, 16, 810);
        double target = expected_log_abs_det(sc.cocycle, kFull, kHalf);
        double budget = 3.0 * (est.std_errors.sum() + 1e-12);
        c.require(std::abs(est.exponents.sum() - target) <= budget,
                  sc.label + " sum rule |" + std::to_string(est.exponents.sum() - target) +
                      "| <= " + std::to_string(budget));
    }
    c.finish();
}

void criterion_9_determinism() {
    Criterion c("criterion-9 seed-determinism", 120.0);
    {
        Cocycle a = standard_test_cocycle();
        SpectrumEstimate e1 = estimate_spectrum(a, kFull, kHalf, 20000, 8, 909);
        SpectrumEstimate e2 = estimate_spectrum(a, kFull, kHalf, 20000, 8, 909);
        SpectrumEstimate e3 =
            estimate_spectrum(a, kFull, kHalf, 20000, 8, 909, Execution::serial);
        c.require(e1.per_sample == e2.per_sample, "spectrum rerun bit-identical");
        c.require(e1.per_sample == e3.per_sample, "serial kernel bit-identical to parallel");
    }
    {
        Cocycle rot = constant2(rotation2(0.3));
        MakeSimpleResult r1 = make_simple(rot, kFull, 0.05, kDefaultDeltaPinch,
                                          kDefaultDeltaTwist, 910);
        MakeSimpleResult r2 = make_simple(rot, kFull, 0.05, kDefaultDeltaPinch,
                                          kDefaultDeltaTwist, 910);
        bool same = true;
        for (const auto& [w, m] : r1.cocycle.table().entries)
            if (!(m == r2.cocycle.table().entries.at(w))) same = false;
        c.require(same, "make_simple rerun bit-identical");
    }
    {
        Cocycle a = standard_test_cocycle();
        BunchingCertificate cert = certify_bunching(a, kFull);
        HomoclinicData s1 = make_homoclinic(make_periodic({0}, kFull), {1}, kFull);
        RankProbeReport p1 = submersion_rank_probe(a, kFull, cert, {s1}, 8, 1e-5, 911);
        RankProbeReport p2 = submersion_rank_probe(a, kFull, cert, {s1}, 8, 1e-5, 911);
        RankProbeReport p3 = submersion_rank_probe(a, kFull, cert, {s1}, 8, 1e-5, 911, false);
        c.require(p1.singular_values == p2.singular_values, "rank probe rerun bit-identical");
        c.require(p1.singular_values == p3.singular_values, "serial probe bit-identical");
    }
    {
        Cocycle a = constant2(diag2(2.0, 0.5));
        InducedSystem ind = induce(kFull, {0}, 16);
        ScalingParams params;
        params.n_iter = 20000;
        params.n_samples = 4;
        params.seed = 912;
        ScalingReport s1 = check_scaling(a, kFull, ind, kHalf, params);
        ScalingReport s2 = check_scaling(a, kFull, ind, kHalf, params);
        c.require(s1.ratios == s2.ratios, "scaling check rerun bit-identical");
    }
    c.finish();
}

}  // namespace

int main() {
    criterion_1_holonomy_identities();
    criterion_2_cauchy_rate();
    criterion_3_derivatives();
    criterion_4_simple_spectra();
    criterion_5_make_simple_contract();
    criterion_6_rank_probe();
    criterion_7_induced_scaling();
    criterion_8_closed_form_oracle();
    criterion_9_determinism();
    if (failures == 0)
        std::printf("acceptance: all 9 criteria passed\n");
    else
        std::printf("acceptance: %d criterion(s) FAILED\n", failures);
    return failures;
}
