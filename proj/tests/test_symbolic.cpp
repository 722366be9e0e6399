#include <catch2/catch_amalgamated.hpp>

#include "cocycle_lab/symbolic.hpp"

using namespace cocycle_lab;

namespace {

SymbolicPoint zero_fixed() { return SymbolicPoint::periodic(2, {0}); }

/// The standard homoclinic companion of 0^inf: ...000.1000...
SymbolicPoint one_at_origin() { return SymbolicPoint(2, {0}, {1}, {0}, 0); }

/// Random eventually bi-periodic point with small alphabet.
SymbolicPoint random_point(Rng& rng, int alphabet) {
    auto word = [&](int max_len) {
        int len = 1 + static_cast<int>(rng.uniform(0.0, max_len));
        Word w(len);
        for (auto& s : w) s = static_cast<int>(rng.uniform(0.0, alphabet));
        return w;
    };
    Word core = word(4);
    if (rng.uniform() < 0.3) core.clear();
    long offset = static_cast<long>(rng.uniform(-5.0, 6.0));
    return SymbolicPoint(alphabet, word(3), core, word(3), offset);
}

}  // namespace

TEST_CASE("coordinate layout of the canonical triple") {
    SymbolicPoint q = one_at_origin();
    CHECK(q.coordinate(0) == 1);
    for (long n = -6; n < 0; ++n) CHECK(q.coordinate(n) == 0);
    for (long n = 1; n < 7; ++n) CHECK(q.coordinate(n) == 0);

    SymbolicPoint x(3, {0, 1}, {2, 2}, {1}, -1);
    CHECK(x.coordinate(-1) == 2);
    CHECK(x.coordinate(0) == 2);
    CHECK(x.coordinate(1) == 1);
    CHECK(x.coordinate(-2) == 1);
    CHECK(x.coordinate(-3) == 0);
    CHECK(x.coordinate(-4) == 1);
}

TEST_CASE("canonicalization reduces tails and trims the core") {
    // "00" reduces to the fixed point with primitive period 1.
    SymbolicPoint p = SymbolicPoint::periodic(2, {0, 0});
    CHECK(p.period() == 1);
    CHECK(p == zero_fixed());

    // A core absorbed by both tails disappears.
    SymbolicPoint x(2, {0}, {0, 0, 0}, {0}, -1);
    CHECK(x == zero_fixed());

    // Equality of canonical forms is coordinate-wise equality.
    SymbolicPoint a(2, {0, 1}, {}, {0, 1}, 0);
    SymbolicPoint b = SymbolicPoint::periodic(2, {0, 1});
    CHECK(a == b);
    SymbolicPoint c(2, {1, 0}, {}, {1, 0}, 1);  // same sequence, shifted description
    CHECK(c == b);
}

TEST_CASE("shift: fixed point invariance") {
    SymbolicPoint p = zero_fixed();
    CHECK(p.shifted(5) == p);
}

TEST_CASE("shift: left shift moves the core") {
    SymbolicPoint x = one_at_origin();
    SymbolicPoint y = x.shifted(1);
    CHECK(y.coordinate(-1) == 1);
    CHECK(y.coordinate(0) == 0);
    for (long n = -8; n <= 8; ++n) CHECK(y.coordinate(n) == x.coordinate(n + 1));
}

TEST_CASE("shift: period divides shift amount") {
    SymbolicPoint p = SymbolicPoint::periodic(2, {0, 1});
    CHECK(p.shifted(2) == p);
    CHECK(p.shifted(1) != p);
}

TEST_CASE("shift inverts: shift(shift(x,j),-j) == x") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        SymbolicPoint x = random_point(rng, 3);
        long j = static_cast<long>(rng.uniform(-64.0, 65.0));
        CHECK(x.shifted(j).shifted(-j) == x);
    }
}

TEST_CASE("equality matches window agreement on randomized points") {
    Rng rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        SymbolicPoint x = random_point(rng, 2);
        SymbolicPoint y = random_point(rng, 2);
        long extent = 2 * static_cast<long>(x.left_tail().size() + x.core().size() +
                                            x.right_tail().size() + y.left_tail().size() +
                                            y.core().size() + y.right_tail().size()) +
                      std::abs(x.core_start()) + std::abs(y.core_start()) + 8;
        bool windows_agree = true;
        for (long n = -extent; n <= extent && windows_agree; ++n)
            windows_agree = x.coordinate(n) == y.coordinate(n);
        CHECK((x == y) == windows_agree);
    }
}

TEST_CASE("distance: identical points") {
    CHECK(distance(zero_fixed(), zero_fixed(), 0.5) == 0.0);
}

TEST_CASE("distance: disagreement at the origin gives 1") {
    // x = 0^inf, y differs only at coordinate 0, N = 0.
    CHECK(distance(zero_fixed(), one_at_origin(), 0.5) == 1.0);
}

TEST_CASE("distance: shifting the origin-disagreement pair") {
    SymbolicPoint x = zero_fixed();
    SymbolicPoint y = one_at_origin();
    // (x, y) is an unstable pair (agree strictly in the past). The inverse
    // shift moves the disagreement to +1, so the symmetric window grows to
    // N = 1 and the distance contracts exactly by theta.
    CHECK(distance(x.shifted(-1), y.shifted(-1), 0.5) == 0.5);
    // The forward shift puts the disagreement at -1, still inside the
    // symmetric window [-1, 1): the distance stays 1.
    CHECK(distance(x.shifted(1), y.shifted(1), 0.5) == 1.0);
}

TEST_CASE("distance is a theta-ultrametric") {
    Rng rng(11);
    const double theta = 0.5;
    for (int trial = 0; trial < 150; ++trial) {
        SymbolicPoint x = random_point(rng, 2);
        SymbolicPoint y = random_point(rng, 2);
        SymbolicPoint z = random_point(rng, 2);
        double dxy = distance(x, y, theta);
        double dyx = distance(y, x, theta);
        CHECK(dxy == dyx);
        CHECK(distance(x, z, theta) <= std::max(dxy, distance(y, z, theta)) + 1e-15);
    }
}

TEST_CASE("stable and unstable contraction are exact for the cylinder metric") {
    Rng rng(13);
    const double theta = 0.5;
    int checked = 0;
    for (int trial = 0; trial < 120; ++trial) {
        SymbolicPoint x = random_point(rng, 2);
        const long K = 9;
        // Stable companion: identical from coordinate 0 on, random past.
        Word past(1 + static_cast<int>(rng.uniform(0.0, 3.0)));
        for (auto& s : past) s = static_cast<int>(rng.uniform(0.0, 2.0));
        SymbolicPoint ys(2, past, x.window(0, K),
                         x.window(K + 1, K + static_cast<long>(x.right_tail().size())), 0);
        REQUIRE(agree_on_right(x, ys));
        if (x != ys) {
            double d0 = distance(x, ys, theta);
            CHECK(distance(x.shifted(1), ys.shifted(1), theta) == Catch::Approx(theta * d0));
            ++checked;
        }
        // Unstable companion: identical on n < 0, random future.
        Word future(1 + static_cast<int>(rng.uniform(0.0, 3.0)));
        for (auto& s : future) s = static_cast<int>(rng.uniform(0.0, 2.0));
        SymbolicPoint yu(2, x.window(-K - static_cast<long>(x.left_tail().size()), -K - 1),
                         x.window(-K, -1), future, -K);
        REQUIRE(agree_on_left(x, yu));
        if (x != yu) {
            double d0 = distance(x, yu, theta);
            CHECK(distance(x.shifted(-1), yu.shifted(-1), theta) == Catch::Approx(theta * d0));
            ++checked;
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("make_periodic examples") {
    ShiftSystem full = ShiftSystem::full_shift(2);
    CHECK(make_periodic({0}, full).period() == 1);
    CHECK(make_periodic({0, 1}, full).period() == 2);
    CHECK(make_periodic({0, 0}, full).period() == 1);

    ShiftSystem golden = ShiftSystem::subshift((Eigen::Matrix<int, -1, -1>(2, 2) << 1, 1, 1, 0).finished());
    CHECK_THROWS_WITH(make_periodic({1, 1}, golden), Catch::Matchers::ContainsSubstring("1->1"));
    CHECK_THROWS_AS(make_periodic({1}, golden), Error);  // wrap-around 1->1
    CHECK(make_periodic({0, 1}, golden).period() == 2);
}

TEST_CASE("make_homoclinic: coordinate membership checks") {
    ShiftSystem full = ShiftSystem::full_shift(2);
    SymbolicPoint p = make_periodic({0}, full);

    HomoclinicData h = make_homoclinic(p, {1}, full);
    CHECK(h.m == 1);
    CHECK(h.q == one_at_origin());
    // q in the unstable set of p, f^m(q) in the stable set of p, verified on
    // a window well beyond both representations.
    const long win = 3 * h.m + 3 * p.period() + 3;
    for (long n = -win; n < 0; ++n) CHECK(h.q.coordinate(n) == p.coordinate(n));
    SymbolicPoint fq = h.q.shifted(h.m);
    for (long n = 0; n <= win; ++n) CHECK(fq.coordinate(n) == p.coordinate(n));

    CHECK_THROWS_AS(make_homoclinic(p, {0}, full), Error);  // q == p

    SymbolicPoint p2 = make_periodic({0, 1}, full);
    HomoclinicData h2 = make_homoclinic(p2, {1, 1}, full);
    CHECK(h2.m == 2);
    for (long n = -10; n < 0; ++n) CHECK(h2.q.coordinate(n) == p2.coordinate(n));
    SymbolicPoint fq2 = h2.q.shifted(2);
    for (long n = 0; n <= 10; ++n) CHECK(fq2.coordinate(n) == p2.coordinate(n));

    // Connector length must be a multiple of per(p).
    CHECK_THROWS_AS(make_homoclinic(p2, {1}, full), Error);
}

TEST_CASE("isolating_depth from coordinate comparison") {
    SymbolicPoint p = zero_fixed();
    SymbolicPoint q = one_at_origin();

    // q vs 0^inf differ at coordinate 0: depth 0 already excludes.
    CHECK(isolating_depth(q, {p}) == 0);
    CHECK(isolating_depth(p, {q}) == 0);
    // Every shift of q moves the single 1 off coordinate 0, so each orbit
    // point already differs from q at the origin.
    CHECK(isolating_depth(q, {q.shifted(1)}) == 0);
    CHECK(isolating_depth(q, {q.shifted(-1)}) == 0);

    // A pattern agreeing at the origin needs positive depth: core "11".
    SymbolicPoint q2(2, {0}, {1, 1}, {0}, 0);
    // f(q2) has coordinates (-1,0,1) = (1,1,0): agrees with q2 at 0,
    // disagrees at -1 and +1.
    CHECK(isolating_depth(q2, {q2.shifted(1)}) == 1);

    CHECK_THROWS_AS(isolating_depth(q, {q}), Error);

    // (01)-periodic vs (10)-periodic disagree at 0.
    SymbolicPoint a = SymbolicPoint::periodic(2, {0, 1});
    CHECK(isolating_depth(a, {a.shifted(1)}) == 0);
}

TEST_CASE("induce: full 2-shift, base 0") {
    ShiftSystem full = ShiftSystem::full_shift(2);
    InducedSystem ind = induce(full, {0}, 3);
    REQUIRE(ind.words.size() == 3);
    CHECK(ind.words[0].symbols == Word{0});
    CHECK(ind.words[0].return_time == 1);
    CHECK(ind.words[1].symbols == Word{0, 1});
    CHECK(ind.words[1].return_time == 2);
    CHECK(ind.words[2].symbols == Word{0, 1, 1});
    CHECK(ind.words[2].return_time == 3);

    InducedSystem tiny = induce(full, {0}, 1);
    REQUIRE(tiny.words.size() == 1);
    CHECK(tiny.words[0].symbols == Word{0});
}

TEST_CASE("induce: golden mean shift filters inadmissible words") {
    ShiftSystem golden = ShiftSystem::subshift((Eigen::Matrix<int, -1, -1>(2, 2) << 1, 1, 1, 0).finished());
    InducedSystem ind = induce(golden, {0}, 3);
    REQUIRE(ind.words.size() == 2);
    CHECK(ind.words[0].symbols == Word{0});
    CHECK(ind.words[1].symbols == Word{0, 1});
}

TEST_CASE("induce: overlapping base word") {
    ShiftSystem full = ShiftSystem::full_shift(2);
    InducedSystem ind = induce(full, {0, 0}, 3);
    // r=1: 0 (000); r=2: none ("0 1 00" has no return at 1? "0100": j=1 -> 10 no;
    // j=2 -> 00 yes, but that is r=2 with word 01); r=3: 010 -> "01000"? check code below.
    REQUIRE(!ind.words.empty());
    CHECK(ind.words[0].symbols == Word{0});
    CHECK(ind.words[0].return_time == 1);
    for (const auto& rw : ind.words) {
        // Full cylinder word is admissible and has no earlier return.
        Word full_word = rw.symbols;
        full_word.insert(full_word.end(), {0, 0});
        for (long j = 1; j < rw.return_time; ++j) {
            bool is_return = full_word[j] == 0 && full_word[j + 1] == 0;
            CHECK_FALSE(is_return);
        }
        CHECK(full_word[rw.return_time] == 0);
        CHECK(full_word[rw.return_time + 1] == 0);
    }
}

TEST_CASE("induce: Kac identity under Bernoulli(1/2,1/2)") {
    ShiftSystem full = ShiftSystem::full_shift(2);
    // mu(J(l)) = 2^{-(r+1)} for base "0"; sum of mu(J)*r over mu([I]) tends
    // to 1/mu([I]) = 2 as the horizon grows.
    double mu_base = 0.5;
    double prev_gap = 10.0;
    for (long R : {4L, 8L, 16L}) {
        InducedSystem ind = induce(full, {0}, R);
        double acc = 0.0;
        for (const auto& rw : ind.words)
            acc += std::pow(0.5, static_cast<double>(rw.return_time + 1)) * rw.return_time;
        double gap = std::abs(acc / mu_base - 2.0);
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
    CHECK(prev_gap < 1e-3);
}

TEST_CASE("induce rejects bad inputs") {
    ShiftSystem golden = ShiftSystem::subshift((Eigen::Matrix<int, -1, -1>(2, 2) << 1, 1, 1, 0).finished());
    CHECK_THROWS_AS(induce(golden, {1, 1}, 3), Error);
    CHECK_THROWS_AS(induce(golden, {}, 3), Error);
    // Horizon must reach at least the base word length.
    ShiftSystem full = ShiftSystem::full_shift(2);
    CHECK_THROWS_AS(induce(full, {0, 0}, 1), Error);
}

TEST_CASE("agree_on_left / agree_on_right are exact") {
    SymbolicPoint p = zero_fixed();
    SymbolicPoint q = one_at_origin();
    CHECK(agree_on_left(p, q));
    CHECK_FALSE(agree_on_right(p, q));
    CHECK(agree_on_right(p, q.shifted(1)));

    SymbolicPoint a = SymbolicPoint::periodic(2, {0, 1});
    SymbolicPoint b = SymbolicPoint::periodic(2, {1, 0});
    CHECK_FALSE(agree_on_left(a, b));
    CHECK_FALSE(agree_on_right(a, b));
}
