#include "cocycle_lab/linalg.hpp"

#include <Eigen/SVD>

namespace cocycle_lab {

double spectral_norm(const Matrix& m) {
    return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

double smallest_singular_value(const Matrix& m) {
    auto sv = Eigen::JacobiSVD<Matrix>(m).singularValues();
    return sv(sv.size() - 1);
}

double condition_number(const Matrix& m) {
    auto sv = Eigen::JacobiSVD<Matrix>(m).singularValues();
    double smin = sv(sv.size() - 1);
    if (smin <= 0.0) throw Error("condition_number: singular matrix");
    return sv(0) / smin;
}

Matrix matrix_exponential(const Matrix& m) {
    // Scale until the norm is small, run the series, square back.
    double norm = m.cwiseAbs().sum();
    int squarings = 0;
    while (norm > 0.5 && squarings < 40) {
        norm *= 0.5;
        ++squarings;
    }
    Matrix a = m / std::pow(2.0, squarings);
    Matrix term = Matrix::Identity(m.rows(), m.cols());
    Matrix sum = term;
    for (int k = 1; k <= 24; ++k) {
        term = (term * a) / static_cast<double>(k);
        sum += term;
    }
    for (int s = 0; s < squarings; ++s) sum = sum * sum;
    return sum;
}

double relative_error(const Matrix& a, const Matrix& b) {
    double scale = std::max({1.0, a.norm(), b.norm()});
    return (a - b).norm() / scale;
}

bool is_real(const Matrix& m, double tol) {
    return m.imag().cwiseAbs().maxCoeff() <= tol;
}

Matrix random_gaussian(int rows, int cols, ScalarField field, Rng& rng) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            double re = rng.normal();
            double im = field == ScalarField::complex ? rng.normal() : 0.0;
            m(i, j) = Complex(re, im);
        }
    return m;
}

Matrix random_unitary(int d, Rng& rng) {
    Matrix g = random_gaussian(d, d, ScalarField::complex, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < d; ++i) {
        Complex rii = r(i, i);
        q.col(i) *= rii / std::abs(rii);
    }
    return q;
}

Matrix random_rotation(int d, Rng& rng) {
    Matrix g = random_gaussian(d, d, ScalarField::real, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < d; ++i)
        if (r(i, i).real() < 0.0) q.col(i) *= -1.0;
    if (q.determinant().real() < 0.0) q.col(0) *= -1.0;
    return q;
}

Matrix random_small_rotation(int d, double angle, ScalarField field, Rng& rng) {
    Matrix g = random_gaussian(d, d, field, rng);
    Matrix skew = (g - g.adjoint()) / 2.0;
    if (field == ScalarField::complex) {
        // Make it traceless so exp stays special unitary.
        skew -= Matrix::Identity(d, d) * (skew.trace() / static_cast<double>(d));
    }
    double norm = spectral_norm(skew);
    if (norm <= 0.0) return Matrix::Identity(d, d);
    return matrix_exponential(skew * (angle / norm));
}

}  // namespace cocycle_lab
