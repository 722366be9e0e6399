#include "cocycle_lab/holonomy.hpp"

#include <cmath>

namespace cocycle_lab {

namespace {

Matrix solve_left(const Matrix& p, const Matrix& q) {
    // p^{-1} q without forming the inverse.
    return p.partialPivLu().solve(q);
}

void require_stable_pair(const SymbolicPoint& x, const SymbolicPoint& y) {
    if (!agree_on_right(x, y))
        throw Error("holonomy: y is not in the local stable set of x");
}

void require_unstable_pair(const SymbolicPoint& x, const SymbolicPoint& y) {
    if (!agree_on_left(x, y))
        throw Error("holonomy: y is not in the local unstable set of x");
}

double tail_bound(const BunchingCertificate& cert, double dist, long n) {
    return cert.chain_constant * cert.comparison_constant *
           std::pow(cert.tau, static_cast<double>(n)) * std::pow(dist, cert.eta) /
           (1.0 - cert.tau);
}

}  // namespace

HolonomyResult stable_holonomy(const Cocycle& a, const BunchingCertificate& cert,
                               const SymbolicPoint& x, const SymbolicPoint& y, double tol) {
    if (!(tol > 0.0)) throw Error("holonomy: tol must be positive");
    require_stable_pair(x, y);
    const int d = a.dimension();
    const Matrix id = Matrix::Identity(d, d);

    if (a.is_finite_window()) {
        const long w = a.window_radius();
        Matrix h = solve_left(a.product(y, w), a.product(x, w));
        // The sequence is constant from w on; check rather than trust.
        Matrix deep = solve_left(a.product(y, w + 3), a.product(x, w + 3));
        if ((h - deep).norm() > 1e-11 * std::max(1.0, h.norm()))
            throw Error("stable holonomy failed its finite-window stabilization check");
        return HolonomyResult{h, 0.0, w, true};
    }

    const double dist = distance(x, y, cert.theta);
    if (dist == 0.0) return HolonomyResult{id, 0.0, 0, true};

    // Accumulate the telescoping increments
    //   H^{n+1} - H^n = A^n(y)^{-1} [A(f^n y)^{-1} A(f^n x) - id] A^n(x)
    // rather than solving with the full products once at the stopping index:
    // increments vanish (the evaluations become identical) long before the
    // products lose numerical rank, so a loose certificate only costs
    // harmless extra iterations.  A bitwise-equal evaluation pair is a
    // mathematically zero increment and is never pushed through the solve.
    Matrix h = id;
    Matrix px = id, py = id;  // n-step products, jointly normalized
    for (long n = 0;; ++n) {
        double tail = tail_bound(cert, dist, n);
        if (tail < tol) return HolonomyResult{h, tail, n, false};
        if (n >= kTruncationCap)
            throw Error("stable holonomy: truncation cap reached; certificate too loose");
        Matrix bx = a.evaluate(x.shifted(n));
        Matrix by = a.evaluate(y.shifted(n));
        if (!(bx == by)) {
            Matrix bracket = solve_left(by, bx) - id;
            h += solve_left(py, bracket * px);
        }
        px = bx * px;
        py = by * py;
        double s = std::max(px.norm(), 1.0);
        px /= s;
        py /= s;
    }
}

HolonomyResult unstable_holonomy(const Cocycle& a, const BunchingCertificate& cert,
                                 const SymbolicPoint& x, const SymbolicPoint& y, double tol) {
    if (!(tol > 0.0)) throw Error("holonomy: tol must be positive");
    require_unstable_pair(x, y);
    const int d = a.dimension();
    const Matrix id = Matrix::Identity(d, d);

    if (a.is_finite_window()) {
        const long w = a.window_radius();
        // H^{-n} = A^n(f^{-n} y) A^n(f^{-n} x)^{-1}, constant from n = w on.
        auto at_depth = [&](long n) {
            Matrix qx = a.product(x.shifted(-n), n);
            Matrix qy = a.product(y.shifted(-n), n);
            return Matrix(qy * qx.partialPivLu().solve(id));
        };
        Matrix h = at_depth(w);
        Matrix deep = at_depth(w + 3);
        if ((h - deep).norm() > 1e-11 * std::max(1.0, h.norm()))
            throw Error("unstable holonomy failed its finite-window stabilization check");
        return HolonomyResult{h, 0.0, w, true};
    }

    const double dist = distance(x, y, cert.theta);
    if (dist == 0.0) return HolonomyResult{id, 0.0, 0, true};

    // Dual telescoping accumulation with backward products
    //   H^{-(n+1)} - H^{-n} = A^{-n}(y)^{-1} [A(f^{-n-1} y) A(f^{-n-1} x)^{-1} - id] A^{-n}(x),
    // where A^{-n}(z)^{-1} = A^n(f^{-n} z).  Same zero-increment skip as the
    // stable case.
    Matrix h = id;
    Matrix qx = id, qy = id;  // A^n(f^{-n} .) with joint normalization
    for (long n = 0;; ++n) {
        double tail = tail_bound(cert, dist, n);
        if (tail < tol) return HolonomyResult{h, tail, n, false};
        if (n >= kTruncationCap)
            throw Error("unstable holonomy: truncation cap reached; certificate too loose");
        Matrix bx = a.evaluate(x.shifted(-n - 1));
        Matrix by = a.evaluate(y.shifted(-n - 1));
        if (!(bx == by)) {
            Matrix bracket = by * bx.partialPivLu().solve(id) - id;
            // qy * bracket * qx^{-1}, with the inverse applied as a solve.
            Matrix rhs = (qx.transpose().partialPivLu().solve((qy * bracket).transpose()));
            h += rhs.transpose();
        }
        qx = qx * bx;
        qy = qy * by;
        double s = std::max(qx.norm(), 1.0);
        qx /= s;
        qy /= s;
    }
}

HolonomyIdentityReport holonomy_identities_check(const Cocycle& a, const BunchingCertificate& cert,
                                                 const SymbolicPoint& x, const SymbolicPoint& y,
                                                 const SymbolicPoint& z, long j, double tol) {
    if (j < 1) throw Error("holonomy_identities_check: j must be >= 1");
    require_stable_pair(x, y);
    require_stable_pair(x, z);
    require_stable_pair(z, y);

    HolonomyResult hxy = stable_holonomy(a, cert, x, y, tol);
    HolonomyResult hzy = stable_holonomy(a, cert, z, y, tol);
    HolonomyResult hxz = stable_holonomy(a, cert, x, z, tol);
    HolonomyResult hyx = stable_holonomy(a, cert, y, x, tol);

    HolonomyIdentityReport rep;
    rep.composition_residual = (hxy.value - hzy.value * hxz.value).norm();
    rep.inverse_residual =
        (hyx.value * hxy.value - Matrix::Identity(a.dimension(), a.dimension())).norm();

    HolonomyResult shifted = stable_holonomy(a, cert, x.shifted(j), y.shifted(j), tol);
    Matrix ajx = a.product(x, j), ajy = a.product(y, j);
    Matrix ajx_inv =
        ajx.partialPivLu().solve(Matrix::Identity(a.dimension(), a.dimension()));
    Matrix transported = ajy * hxy.value * ajx_inv;
    rep.equivariance_residual = (shifted.value - transported).norm();

    double scale = 1.0 + hxy.value.norm() + transported.norm() + ajy.norm() * ajx_inv.norm();
    double h_norms = 1.0 + hzy.value.norm() + hxz.value.norm() + hyx.value.norm() +
                     hxy.value.norm();
    rep.budget = (hxy.error_bound + hzy.error_bound + hxz.error_bound + hyx.error_bound) *
                     h_norms +
                 shifted.error_bound + hxy.error_bound * ajy.norm() * ajx_inv.norm() +
                 1e-10 * scale;
    rep.pass = rep.composition_residual <= rep.budget && rep.inverse_residual <= rep.budget &&
               rep.equivariance_residual <= rep.budget;
    return rep;
}

namespace {

struct DerivativeBounds {
    bool finite = true;
    long stabilization = 0;  // first index from which terms provably vanish
    double c4 = 0.0;         // term-size constant for the long-range tail
    double tangent_size = 0.0;
};

DerivativeBounds derivative_bounds(const Cocycle& a, const BunchingCertificate& cert,
                                   const Tangent& t, const ShiftSystem& system) {
    DerivativeBounds b;
    if (a.is_finite_window()) {
        b.finite = true;
        b.stabilization = std::max(a.window_radius(), t.table.radius);
        return b;
    }
    b.finite = false;
    const auto& s = a.long_range_spec();
    // ||H^s - id|| <= cbar * d^eta along the orbit; ||B^{-1}||_{0,eta} from
    // the declared sup and Holder bounds.
    double cbar = cert.chain_constant * cert.comparison_constant / (1.0 - cert.tau);
    double inv_holder = s.sup_inv_norm * s.sup_inv_norm * s.holder_constant;
    double c3 = s.sup_inv_norm + inv_holder;
    b.c4 = (2.0 * cbar + 1.0) * c3 * cert.chain_constant;
    b.tangent_size = tangent_norm(t, system, cert.eta);
    return b;
}

}  // namespace

Matrix stable_holonomy_derivative(const Cocycle& a, const BunchingCertificate& cert,
                                  const Tangent& t, const ShiftSystem& system,
                                  const SymbolicPoint& x, const SymbolicPoint& y, double tol) {
    if (!(tol > 0.0)) throw Error("holonomy derivative: tol must be positive");
    require_stable_pair(x, y);
    if (t.dimension != a.dimension()) throw Error("tangent dimension mismatch");
    const int d = a.dimension();
    const Matrix id = Matrix::Identity(d, d);
    const double dist = distance(x, y, cert.theta);

    DerivativeBounds bounds = derivative_bounds(a, cert, t, system);
    Matrix px = id, py = id;  // i-step products, jointly normalized
    Matrix sum = Matrix::Zero(d, d);
    const double inner_tol = std::min(tol, 1e-10);

    for (long i = 0;; ++i) {
        if (bounds.finite && i >= bounds.stabilization + 3) break;
        if (!bounds.finite) {
            double tail = bounds.c4 * std::pow(cert.tau, static_cast<double>(i)) *
                          std::pow(dist, cert.eta) * bounds.tangent_size / (1.0 - cert.tau);
            if (tail < tol) break;
            if (i >= kTruncationCap)
                throw Error("holonomy derivative: truncation cap reached");
        }
        SymbolicPoint xi = x.shifted(i), yi = y.shifted(i);
        Matrix bx = a.evaluate(xi), by = a.evaluate(yi);
        Matrix tx = t.evaluate(xi), ty = t.evaluate(yi);
        Matrix hi = stable_holonomy(a, cert, xi, yi, inner_tol).value;
        Matrix bracket = hi * solve_left(bx, tx) - solve_left(by, ty) * hi;
        // With identical evaluation data the bracket cancels bit-exactly;
        // only genuinely nonzero brackets go through the product sandwich.
        Matrix term = bracket.cwiseAbs().maxCoeff() == 0.0
                          ? Matrix(Matrix::Zero(d, d))
                          : Matrix(solve_left(py, bracket * px));
        if (bounds.finite && i >= bounds.stabilization) {
            if (term.norm() > 1e-10 * std::max(1.0, sum.norm()))
                throw Error("stable holonomy derivative: series failed to terminate at the window");
        }
        sum += term;
        px = bx * px;
        py = by * py;
        double s = std::max(px.norm(), 1.0);
        px /= s;
        py /= s;
    }
    return sum;
}

Matrix unstable_holonomy_derivative(const Cocycle& a, const BunchingCertificate& cert,
                                    const Tangent& t, const ShiftSystem& system,
                                    const SymbolicPoint& x, const SymbolicPoint& y, double tol) {
    if (!(tol > 0.0)) throw Error("holonomy derivative: tol must be positive");
    require_unstable_pair(x, y);
    if (t.dimension != a.dimension()) throw Error("tangent dimension mismatch");
    const int d = a.dimension();
    const Matrix id = Matrix::Identity(d, d);
    const double dist = distance(x, y, cert.theta);

    DerivativeBounds bounds = derivative_bounds(a, cert, t, system);
    // rx, ry hold the backward products A^{-i}(x), A^{-i}(y), extended by
    // one inverse factor per step and jointly normalized.
    Matrix rx = id, ry = id;
    Matrix sum = Matrix::Zero(d, d);
    const double inner_tol = std::min(tol, 1e-10);

    for (long i = 1;; ++i) {
        if (bounds.finite && i >= bounds.stabilization + 4) break;
        if (!bounds.finite) {
            double tail = bounds.c4 * std::pow(cert.tau, static_cast<double>(i - 1)) *
                          std::pow(dist, cert.eta) * bounds.tangent_size / (1.0 - cert.tau);
            if (tail < tol) break;
            if (i >= kTruncationCap)
                throw Error("holonomy derivative: truncation cap reached");
        }
        SymbolicPoint xi = x.shifted(-i), yi = y.shifted(-i);
        Matrix bx = a.evaluate(xi), by = a.evaluate(yi);
        rx = solve_left(bx, rx);
        ry = solve_left(by, ry);
        double s = std::max(rx.norm(), 1.0);
        rx /= s;
        ry /= s;

        Matrix tx = t.evaluate(xi), ty = t.evaluate(yi);
        Matrix hi = unstable_holonomy(a, cert, xi, yi, inner_tol).value;
        Matrix bracket = hi * solve_left(bx, tx) - solve_left(by, ty) * hi;
        Matrix term = bracket.cwiseAbs().maxCoeff() == 0.0
                          ? Matrix(Matrix::Zero(d, d))
                          : Matrix(solve_left(ry, bracket * rx));
        if (bounds.finite && i >= bounds.stabilization + 1) {
            if (term.norm() > 1e-10 * std::max(1.0, sum.norm()))
                throw Error(
                    "unstable holonomy derivative: series failed to terminate at the window");
        }
        sum -= term;
    }
    return sum;
}

}  // namespace cocycle_lab
