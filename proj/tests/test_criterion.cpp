#include <catch2/catch_amalgamated.hpp>

#include "cocycle_lab/criterion.hpp"
#include "test_support.hpp"

using namespace cocycle_lab;
using namespace cocycle_lab::testing;

namespace {

const ShiftSystem kFull = ShiftSystem::full_shift(2);

Matrix diag2(Complex a, Complex b) {
    Matrix m(2, 2);
    m << a, 0, 0, b;
    return m;
}

Cocycle constant_cocycle(const Matrix& m, ScalarField field = ScalarField::complex) {
    WindowTable t;
    t.radius = 0;
    t.entries[{0}] = m;
    t.entries[{1}] = m;
    return Cocycle::finite_window(static_cast<int>(m.rows()), field, std::move(t));
}

HomoclinicData standard_witness() {
    SymbolicPoint p = make_periodic({0}, kFull);
    return make_homoclinic(p, {1}, kFull);
}

/// Independent oracle for the twisting margin: enumerate index pairs by hand
/// and take SVDs of the assembled normalized-column matrices.
double twisting_margin_oracle(const EigenData& eigen, const Matrix& psi) {
    const int d = static_cast<int>(eigen.values.size());
    double margin = 1.0 / 0.0;
    for (int mi = 0; mi < (1 << d); ++mi)
        for (int mj = 0; mj < (1 << d); ++mj) {
            if (__builtin_popcount(unsigned(mi)) + __builtin_popcount(unsigned(mj)) != d) continue;
            Matrix m(d, d);
            int c = 0;
            for (int i = 0; i < d; ++i)
                if (mi & (1 << i)) {
                    Eigen::VectorXcd v = psi * eigen.vectors.col(i);
                    m.col(c++) = v / v.norm();
                }
            for (int j = 0; j < d; ++j)
                if (mj & (1 << j)) m.col(c++) = eigen.vectors.col(j);
            margin = std::min(margin, smallest_singular_value(m));
        }
    return margin;
}

}  // namespace

TEST_CASE("check_pinching: distinct moduli") {
    auto rep = check_pinching_matrix(diag2(2.0, 1.0), kDefaultDeltaPinch);
    CHECK(rep.pinching);
    CHECK(rep.margin == Catch::Approx(0.5));
}

TEST_CASE("check_pinching: rotation fails; real mode reports the pair") {
    auto rep = check_pinching_matrix(rotation2(0.3), kDefaultDeltaPinch, /*real_mode=*/true);
    CHECK_FALSE(rep.pinching);
    CHECK(rep.margin == Catch::Approx(0.0).margin(1e-12));
    CHECK(rep.eigen.conjugate_pairs == 1);
}

TEST_CASE("check_pinching: modulus tie with distinct eigenvalues") {
    auto rep = check_pinching_matrix(diag2(2.0, 2.0 * std::exp(Complex(0, M_PI / 4))),
                                     kDefaultDeltaPinch);
    CHECK_FALSE(rep.pinching);
    CHECK(rep.margin == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("check_pinching: defective matrices fail safe") {
    Matrix jordan(2, 2);
    jordan << 1.0, 1.0, 0.0, 1.0;
    auto rep = check_pinching_matrix(jordan, kDefaultDeltaPinch);
    CHECK_FALSE(rep.pinching);
    CHECK(rep.eigen.defective);
    CHECK_FALSE(rep.diagnostic.empty());
}

TEST_CASE("transition_map: constant cocycle collapses to M^m") {
    Matrix m(2, 2);
    m << 1.1, 0.25, -0.15, 0.92;
    Cocycle a = constant_cocycle(m);
    BunchingCertificate cert = certify_bunching(a, kFull);
    HomoclinicData h = standard_witness();
    TransitionMap psi = transition_map(a, cert, h);
    CHECK(relative_error(psi.psi, m) < 1e-13);
    CHECK(psi.error_bound == 0.0);

    SymbolicPoint p2 = make_periodic({0, 1}, kFull);
    HomoclinicData h2 = make_homoclinic(p2, {1, 1}, kFull);
    TransitionMap psi2 = transition_map(a, cert, h2);
    CHECK(relative_error(psi2.psi, Matrix(m * m)) < 1e-13);
}

TEST_CASE("transition_map: window-0 standard pair gives the table entry at 1") {
    Cocycle a = standard_test_cocycle();
    BunchingCertificate cert = certify_bunching(a, kFull);
    TransitionMap psi = transition_map(a, cert, standard_witness());
    CHECK(relative_error(psi.psi, a.table().at({1})) < 1e-14);
}

TEST_CASE("transition_map: window-1 matches deep-truncation holonomies") {
    Rng rng(21);
    Cocycle a = random_cocycle(kFull, 2, 1, ScalarField::complex, rng);
    BunchingCertificate cert = certify_bunching(a, kFull);
    HomoclinicData h = standard_witness();
    TransitionMap psi = transition_map(a, cert, h);

    // Brute-force oracle with depth-12 products on both holonomies.
    auto brute = [&](const SymbolicPoint& x, const SymbolicPoint& y, bool stable) {
        Matrix px = Matrix::Identity(2, 2), py = px;
        for (long j = 0; j < 12; ++j) {
            long s = stable ? j : -(j + 1);
            px = stable ? Matrix(a.evaluate(x.shifted(s)) * px) : Matrix(px * a.evaluate(x.shifted(s)));
            py = stable ? Matrix(a.evaluate(y.shifted(s)) * py) : Matrix(py * a.evaluate(y.shifted(s)));
        }
        return stable ? Matrix(py.inverse() * px) : Matrix(py * px.inverse());
    };
    Matrix hs = brute(h.q.shifted(h.m), h.p, true);
    Matrix hu = brute(h.p, h.q, false);
    Matrix oracle = hs * a.product(h.q, h.m) * hu;
    CHECK(relative_error(psi.psi, oracle) < 1e-12);
}

TEST_CASE("transition_map enforces the homoclinic preconditions") {
    Cocycle a = standard_test_cocycle();
    BunchingCertificate cert = certify_bunching(a, kFull);
    HomoclinicData bad = standard_witness();
    bad.q = SymbolicPoint(2, {1}, {1}, {0}, 0);  // past disagrees with p
    CHECK_THROWS_AS(transition_map(a, cert, bad), Error);
}

TEST_CASE("check_twisting: identity transition map fails on a duplicated index") {
    auto eigen = check_pinching_matrix(diag2(2.0, 0.5), kDefaultDeltaPinch).eigen;
    TransitionMap psi{Matrix::Identity(2, 2), 0.0};
    auto rep = check_twisting(eigen, psi, kDefaultDeltaTwist);
    CHECK_FALSE(rep.twisting);
    CHECK(rep.margin == Catch::Approx(0.0).margin(1e-12));
    CHECK(rep.worst_I == rep.worst_J);  // a duplicated eigenvector column
}

TEST_CASE("check_twisting: Hadamard-type transition map twists the axes") {
    auto eigen = check_pinching_matrix(diag2(2.0, 0.5), kDefaultDeltaPinch).eigen;
    Matrix had(2, 2);
    had << 1, 1, 1, -1;
    had /= std::sqrt(2.0);
    TransitionMap psi{had, 0.0};
    auto rep = check_twisting(eigen, psi, kDefaultDeltaTwist);
    CHECK(rep.twisting);
    CHECK(rep.margin == Catch::Approx(twisting_margin_oracle(eigen, had)));
    // Worst pairs put psi(e_i) at 45 degrees from e_j: sigma_min of a unit
    // 45-degree column pair is sqrt(1 - cos(pi/4)).
    CHECK(rep.margin == Catch::Approx(std::sqrt(1.0 - 1.0 / std::sqrt(2.0))));
}

TEST_CASE("check_twisting: small rotation margin follows the closed form") {
    auto eigen = check_pinching_matrix(diag2(2.0, 0.5), kDefaultDeltaPinch).eigen;
    for (double eps : {0.05, 0.02, 0.005}) {
        TransitionMap psi{rotation2(eps), 0.0};
        auto rep = check_twisting(eigen, psi, kDefaultDeltaTwist);
        CHECK(rep.twisting);
        CHECK(rep.margin == Catch::Approx(std::sqrt(1.0 - std::cos(eps))));
    }
}

TEST_CASE("check_twisting margin is invariant under eigenvalue relabeling") {
    Rng rng(31);
    auto eigen = check_pinching_matrix(diag2(2.0, 0.5), kDefaultDeltaPinch).eigen;
    Matrix psi_m = random_mild_matrix(2, ScalarField::complex, rng);
    TransitionMap psi{psi_m, 0.0};
    double base = check_twisting(eigen, psi, kDefaultDeltaTwist).margin;

    EigenData swapped = eigen;
    swapped.values(0) = eigen.values(1);
    swapped.values(1) = eigen.values(0);
    swapped.vectors.col(0) = eigen.vectors.col(1);
    swapped.vectors.col(1) = eigen.vectors.col(0);
    double permuted = check_twisting(swapped, psi, kDefaultDeltaTwist).margin;
    CHECK(std::abs(base - permuted) < 1e-12);
}

TEST_CASE("certify_simple: standard window-0 pair is simple") {
    Cocycle a = standard_test_cocycle();
    SimplicityCertificate cert = certify_simple(a, kFull, standard_witness());
    CHECK(cert.verdict == Verdict::simple);
    CHECK(cert.pinching_margin == Catch::Approx(0.25));
    CHECK(relative_error(cert.psi, a.table().at({1})) < 1e-13);
    CHECK(cert.twisting_margin > 0.1);
    CHECK(cert.holonomy_error_budget == 0.0);
}

TEST_CASE("certify_simple: diagonal constant cocycle is not twisting") {
    Cocycle a = constant_cocycle(diag2(1.2, 0.9));
    SimplicityCertificate cert = certify_simple(a, kFull, standard_witness());
    CHECK(cert.verdict == Verdict::not_twisting);
    CHECK(cert.twisting_margin <= kDefaultDeltaTwist);
}

TEST_CASE("certify_simple: constant rotation is not pinching") {
    Cocycle a = constant_cocycle(rotation2(0.3));
    SimplicityCertificate cert = certify_simple(a, kFull, standard_witness());
    CHECK(cert.verdict == Verdict::not_pinching);
}

TEST_CASE("search_pinching_point examples") {
    // Fixed point 0^inf already pinches.
    Cocycle a = standard_test_cocycle();
    auto hit = search_pinching_point(a, kFull, 4, kDefaultDeltaPinch);
    REQUIRE(hit);
    CHECK(hit->first == make_periodic({0}, kFull));
    CHECK(hit->second == Catch::Approx(0.25));

    // Real mode: word "0" has a conjugate pair, word "1" passes.
    WindowTable t;
    t.radius = 0;
    t.entries[{0}] = rotation2(0.3);
    t.entries[{1}] = diag2(1.3, 0.8);
    Cocycle b = Cocycle::finite_window(2, ScalarField::real, std::move(t));
    auto hit_b = search_pinching_point(b, kFull, 4, kDefaultDeltaPinch, /*real_mode=*/true);
    REQUIRE(hit_b);
    CHECK(hit_b->first == make_periodic({1}, kFull));

    // Constant rotation: every period matrix is a rotation; nothing pinches.
    Cocycle c = constant_cocycle(rotation2(0.3), ScalarField::real);
    CHECK_FALSE(search_pinching_point(c, kFull, 4, kDefaultDeltaPinch, /*real_mode=*/true));
}

TEST_CASE("psi is stable under holonomy depth refinement (long-range)") {
    Matrix m0 = diag2(1.15, 0.95);
    LongRangeFamily fam;
    fam.m0 = m0;
    fam.m1 = rotation2(0.3) * diag2(1.05, 1.0);
    Cocycle a = make_long_range_cocycle(kFull, fam);
    BunchingCertificate cert = certify_bunching(a, kFull);
    HomoclinicData h = standard_witness();
    TransitionMap coarse = transition_map(a, cert, h, 1e-6);
    TransitionMap fine = transition_map(a, cert, h, 1e-8);
    CHECK((coarse.psi - fine.psi).norm() < coarse.error_bound + 1e-15);
    CHECK(coarse.error_bound > 0.0);
}

TEST_CASE("scaling invariance of the certificate") {
    Cocycle a = standard_test_cocycle();
    Cocycle b = a.scaled(1.7);
    HomoclinicData h = standard_witness();
    SimplicityCertificate ca = certify_simple(a, kFull, h);
    SimplicityCertificate cb = certify_simple(b, kFull, h);
    CHECK(ca.verdict == Verdict::simple);
    CHECK(cb.verdict == Verdict::simple);
    CHECK(ca.pinching_margin == Catch::Approx(cb.pinching_margin));
    CHECK(std::abs(ca.twisting_margin - cb.twisting_margin) < 1e-12);
    // psi scales by c^m; column directions are unchanged.
    CHECK(relative_error(cb.psi, Matrix(1.7 * ca.psi)) < 1e-13);
}
