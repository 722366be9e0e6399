#pragma once

#include "cocycle_lab/cocycle.hpp"

namespace cocycle_lab {

/// Holonomy value with a rigorous bound on the distance to the true limit.
/// Finite-window cocycles stabilize after window-many steps, so their bound
/// is zero and `exact` is set; long-range evaluations report the certified
/// truncation tail.
struct HolonomyResult {
    Matrix value;
    double error_bound = 0.0;
    long terms_used = 0;
    bool exact = false;
};

/// H^s_{x,y} = lim_n A^n(y)^{-1} A^n(x) for y in the local stable set of x.
/// Long-range path truncates once the tail bound
/// chain_constant * comparison_constant * tau^n * d(x,y)^eta / (1 - tau)
/// drops below tol.
HolonomyResult stable_holonomy(const Cocycle& a, const BunchingCertificate& cert,
                               const SymbolicPoint& x, const SymbolicPoint& y, double tol = 1e-9);

/// H^u_{x,y} = lim_n A^{-n}(y)^{-1} A^{-n}(x) for y in the local unstable
/// set of x; dual truncation bound.
HolonomyResult unstable_holonomy(const Cocycle& a, const BunchingCertificate& cert,
                                 const SymbolicPoint& x, const SymbolicPoint& y,
                                 double tol = 1e-9);

/// Residuals of the holonomy algebra at (x, y, z) in one local stable set:
/// composition through z, inverse pairing, and j-step equivariance.
struct HolonomyIdentityReport {
    double composition_residual = 0.0;   // ||H_xy - H_zy . H_xz||
    double inverse_residual = 0.0;       // ||H_yx . H_xy - id||
    double equivariance_residual = 0.0;  // ||H_{f^j x, f^j y} - A^j(y) H_xy A^j(x)^{-1}||
    double budget = 0.0;                 // combined certified bounds + float slack
    bool pass = false;
};

HolonomyIdentityReport holonomy_identities_check(const Cocycle& a, const BunchingCertificate& cert,
                                                 const SymbolicPoint& x, const SymbolicPoint& y,
                                                 const SymbolicPoint& z, long j,
                                                 double tol = 1e-9);

/// Derivative of B -> H^s_{B,x,y} in the tangent direction `t`, as the
/// telescoping series over forward orbit sites.  Finite-window inputs
/// terminate exactly (verified, not assumed); long-range inputs truncate at
/// the certified term bound.
Matrix stable_holonomy_derivative(const Cocycle& a, const BunchingCertificate& cert,
                                  const Tangent& t, const ShiftSystem& system,
                                  const SymbolicPoint& x, const SymbolicPoint& y,
                                  double tol = 1e-9);

/// Dual series over the backward orbit (leading minus sign, sites i >= 1).
Matrix unstable_holonomy_derivative(const Cocycle& a, const BunchingCertificate& cert,
                                    const Tangent& t, const ShiftSystem& system,
                                    const SymbolicPoint& x, const SymbolicPoint& y,
                                    double tol = 1e-9);

/// Truncation indices are capped: a loop passing this bound without meeting
/// its tolerance indicates a loose certificate and raises an Error.
inline constexpr long kTruncationCap = 10'000;

}  // namespace cocycle_lab
