#pragma once

#include "cocycle_lab/holonomy.hpp"

namespace cocycle_lab {

/// Eigenstructure of a period matrix, sorted by decreasing modulus.
struct EigenData {
    Eigen::VectorXcd values;          // sorted by |.| descending
    Matrix vectors;                   // unit columns matching `values`
    double basis_condition = 0.0;     // condition number of `vectors`
    int conjugate_pairs = 0;          // real mode: count of conjugate pairs
    bool defective = false;           // basis condition above threshold
};

struct PinchingReport {
    bool pinching = false;
    double margin = 0.0;  // min over adjacent moduli of (|l_i|-|l_{i+1}|)/|l_i|
    EigenData eigen;
    std::string diagnostic;
};

/// Pinching at p: all eigenvalues of the period matrix have distinct
/// absolute values, with quantitative slack delta_pinch.  Defective period
/// matrices fail safe.  Real mode additionally counts conjugate pairs and
/// requires a real spectrum for a pass.
PinchingReport check_pinching(const Cocycle& a, const SymbolicPoint& p, double delta_pinch,
                              bool real_mode = false);
PinchingReport check_pinching_matrix(const Matrix& period_matrix, double delta_pinch,
                                     bool real_mode = false);

/// Transition map along the homoclinic loop: stable holonomy back to p after
/// m forward steps from q, composed with the unstable holonomy from p to q.
/// Returns the matrix and the propagated holonomy error bound.
struct TransitionMap {
    Matrix psi;
    double error_bound = 0.0;
};

TransitionMap transition_map(const Cocycle& a, const BunchingCertificate& cert,
                             const HomoclinicData& h, double tol = 1e-9);

struct TwistingReport {
    bool twisting = false;
    double margin = 0.0;            // min singular value over subspace pairs
    double propagated_error = 0.0;  // twisting slack consumed by psi's bound
    std::vector<int> worst_I, worst_J;
};

/// Twisting at (p, q): for every pair of eigenvalue index sets (I, J) with
/// |I| + |J| = d, the columns psi * E_I together with E_J stay uniformly
/// independent.  Margin is the smallest singular value over all assembled
/// (normalized-column) matrices.
TwistingReport check_twisting(const EigenData& eigen, const TransitionMap& psi,
                              double delta_twist);

enum class Verdict { simple, not_pinching, not_twisting };

std::string to_string(Verdict v);

/// Everything needed to re-verify the simplicity claim independently:
/// witnesses, the period matrix, eigendata, the transition map, margins
/// and the error budget they were checked against.
struct SimplicityCertificate {
    SymbolicPoint p;
    SymbolicPoint q;
    long m = 0;
    Matrix period_matrix;
    EigenData eigen_data;
    double pinching_margin = 0.0;
    Matrix psi;
    double twisting_margin = 0.0;
    double holonomy_error_budget = 0.0;
    double delta_pinch = 0.0, delta_twist = 0.0;
    BunchingCertificate bunching;
    Verdict verdict = Verdict::not_pinching;

    SimplicityCertificate() : p(SymbolicPoint::periodic(1, {0})), q(p) {}
};

inline constexpr double kDefaultDeltaPinch = 1e-6;
inline constexpr double kDefaultDeltaTwist = 1e-8;

SimplicityCertificate certify_simple(const Cocycle& a, const ShiftSystem& system,
                                     const HomoclinicData& h,
                                     double delta_pinch = kDefaultDeltaPinch,
                                     double delta_twist = kDefaultDeltaTwist, double tol = 1e-9,
                                     bool real_mode = false);

/// First periodic point (primitive admissible words in lexicographic order,
/// lengths 1..max_period) whose period matrix passes check_pinching.
std::optional<std::pair<SymbolicPoint, double>> search_pinching_point(
    const Cocycle& a, const ShiftSystem& system, long max_period, double delta_pinch,
    bool real_mode = false);

}  // namespace cocycle_lab
