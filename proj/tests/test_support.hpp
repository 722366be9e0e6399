#pragma once

#include "cocycle_lab/cocycle.hpp"
#include "cocycle_lab/symbolic.hpp"

namespace cocycle_lab::testing {

inline SymbolicPoint random_point(Rng& rng, int alphabet) {
    auto word = [&](int max_len) {
        int len = 1 + static_cast<int>(rng.uniform(0.0, max_len));
        Word w(len);
        for (auto& s : w) s = static_cast<int>(rng.uniform(0.0, alphabet));
        return w;
    };
    Word core = word(4);
    if (rng.uniform() < 0.3) core.clear();
    long offset = static_cast<long>(rng.uniform(-4.0, 5.0));
    return SymbolicPoint(alphabet, word(3), core, word(3), offset);
}

/// Point agreeing with x on all n >= 0, with a random past.
inline SymbolicPoint stable_companion(const SymbolicPoint& x, Rng& rng) {
    const long K = 8;
    Word past(1 + static_cast<int>(rng.uniform(0.0, 3.0)));
    for (auto& s : past) s = static_cast<int>(rng.uniform(0.0, x.alphabet_size()));
    return SymbolicPoint(x.alphabet_size(), past, x.window(0, K),
                         x.window(K + 1, K + static_cast<long>(x.right_tail().size())), 0);
}

/// Point agreeing with x on all n < 0, with a random future.
inline SymbolicPoint unstable_companion(const SymbolicPoint& x, Rng& rng) {
    const long K = 8;
    Word future(1 + static_cast<int>(rng.uniform(0.0, 3.0)));
    for (auto& s : future) s = static_cast<int>(rng.uniform(0.0, x.alphabet_size()));
    return SymbolicPoint(x.alphabet_size(),
                         x.window(-K - static_cast<long>(x.left_tail().size()), -K - 1),
                         x.window(-K, -1), future, -K);
}

/// Random invertible d x d matrix near a rotation (condition number <= ~2).
inline Matrix random_mild_matrix(int d, ScalarField field, Rng& rng) {
    Matrix base = field == ScalarField::complex ? random_unitary(d, rng) : random_rotation(d, rng);
    Matrix diag = Matrix::Identity(d, d);
    for (int i = 0; i < d; ++i) diag(i, i) = rng.uniform(0.75, 1.3);
    return base * diag;
}

/// Random admissible finite-window cocycle with mild entries (fiber bunched
/// for theta = 1/2 by construction).
inline Cocycle random_cocycle(const ShiftSystem& system, int d, int radius, ScalarField field,
                              Rng& rng) {
    WindowTable t;
    t.radius = radius;
    Word w(2 * radius + 1, 0);
    std::function<void(int)> fill = [&](int pos) {
        if (pos == 2 * radius + 1) {
            if (system.word_admissible(w)) t.entries[w] = random_mild_matrix(d, field, rng);
            return;
        }
        for (int s = 0; s < system.alphabet_size; ++s) {
            w[pos] = s;
            fill(pos + 1);
        }
    };
    fill(0);
    return Cocycle::finite_window(d, field, std::move(t));
}

/// Random tangent supported on every admissible word of the given radius.
inline Tangent random_tangent(const ShiftSystem& system, int d, int radius, ScalarField field,
                              Rng& rng) {
    Tangent t;
    t.dimension = d;
    t.table.radius = radius;
    Word w(2 * radius + 1, 0);
    std::function<void(int)> fill = [&](int pos) {
        if (pos == 2 * radius + 1) {
            if (system.word_admissible(w))
                t.table.entries[w] = 0.5 * random_gaussian(d, d, field, rng);
            return;
        }
        for (int s = 0; s < system.alphabet_size; ++s) {
            w[pos] = s;
            fill(pos + 1);
        }
    };
    fill(0);
    return t;
}

}  // namespace cocycle_lab::testing
