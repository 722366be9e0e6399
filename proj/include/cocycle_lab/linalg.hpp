#pragma once

#include "cocycle_lab/common.hpp"

namespace cocycle_lab {

/// Largest singular value.
double spectral_norm(const Matrix& m);

/// Smallest singular value.
double smallest_singular_value(const Matrix& m);

/// spectral_norm(m) * spectral_norm(m^{-1}), computed from the SVD.
double condition_number(const Matrix& m);

/// exp(m) by scaling-and-squaring on the Taylor series; fine for the small
/// well-scaled generators used here.
Matrix matrix_exponential(const Matrix& m);

/// Relative Frobenius distance ||a-b||_F / max(1, ||a||_F, ||b||_F).
double relative_error(const Matrix& a, const Matrix& b);

bool is_real(const Matrix& m, double tol = 0.0);

/// Haar-ish random unitary (QR of a complex Gaussian with phase-fixed R).
Matrix random_unitary(int d, Rng& rng);
/// Random special orthogonal matrix.
Matrix random_rotation(int d, Rng& rng);
/// exp(angle * K) with K a random unit-norm skew-Hermitian (or real
/// skew-symmetric) generator; a rotation by `angle` in a random plane.
Matrix random_small_rotation(int d, double angle, ScalarField field, Rng& rng);
/// Random matrix with iid standard Gaussian entries (complex or real).
Matrix random_gaussian(int rows, int cols, ScalarField field, Rng& rng);

}  // namespace cocycle_lab
