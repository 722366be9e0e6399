#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>

#include "cocycle_lab/linalg.hpp"
#include "cocycle_lab/symbolic.hpp"

namespace cocycle_lab {

/// Matrix-valued map that reads a symmetric window of symbols: the entry at
/// word w applies at every point whose coordinates -radius..radius spell w.
struct WindowTable {
    int radius = 0;
    std::map<Word, Matrix> entries;

    const Matrix& at(const Word& w) const;
    const Matrix* find(const Word& w) const;
};

/// Evaluator with unbounded window dependence plus declared regularity data:
/// ||A(x) - A(y)|| <= holder_constant * d(x,y)^eta, and uniform bounds on
/// the norms of values and inverses.
struct LongRangeSpec {
    std::function<Matrix(const SymbolicPoint&)> evaluator;
    double holder_constant = 0.0;
    double sup_norm = 1.0;
    double sup_inv_norm = 1.0;
};

/// GL(d)-valued map over the shift. Values are immutable after construction;
/// evaluation and products are safe to call concurrently.
class Cocycle {
public:
    static Cocycle finite_window(int dimension, ScalarField field, WindowTable table,
                                 double eta = 1.0);
    static Cocycle long_range(int dimension, ScalarField field, LongRangeSpec spec,
                              double eta = 1.0);

    int dimension() const { return dimension_; }
    ScalarField field() const { return field_; }
    double eta() const { return eta_; }
    bool is_finite_window() const { return long_range_ == nullptr; }
    int window_radius() const;
    const WindowTable& table() const;

    Matrix evaluate(const SymbolicPoint& x) const;
    /// n-step product A(f^{n-1}x)...A(x); identity for n = 0; for n < 0 the
    /// inverse of the |n|-step product at f^n(x).
    Matrix product(const SymbolicPoint& x, long n) const;

    /// Copy with `table` swapped in (finite-window only).
    Cocycle with_table(WindowTable table) const;
    /// Copy scaled by a positive constant.
    Cocycle scaled(double c) const;

    const LongRangeSpec& long_range_spec() const;

private:
    Cocycle() = default;
    int dimension_ = 0;
    ScalarField field_ = ScalarField::complex;
    double eta_ = 1.0;
    WindowTable table_;
    std::shared_ptr<const LongRangeSpec> long_range_;
};

/// Finite-window tangent: same window shape as a cocycle but with arbitrary
/// (not necessarily invertible) matrix values.
struct Tangent {
    int dimension = 0;
    WindowTable table;

    Matrix evaluate(const SymbolicPoint& x) const;
    static Tangent zero(int dimension, int radius = 0);
    bool is_zero() const;
};

/// Regularity constants certified from the table (or declared, long-range):
///  - log_ratio_constant bounds |log ||A(x)||/||A(y)||| and the inverse-norm
///    analogue by log_ratio_constant * d(x,y)^eta;
///  - comparison_constant bounds ||A(x)^{-1}A(y) - id|| and
///    ||A(y)A(x)^{-1} - id|| by comparison_constant * d(x,y)^eta.
struct HolderData {
    double eta = 1.0;
    double log_ratio_constant = 0.0;
    double comparison_constant = 0.0;
};

HolderData holder_data(const Cocycle& a, const ShiftSystem& system);

/// sup-norm + Holder-constant norm of a tangent table.
double tangent_norm(const Tangent& t, const ShiftSystem& system, double eta);

/// Rewrites a table at a larger window radius: every admissible wider word
/// inherits the entry of its central subword.  No-op for new_radius <= radius.
WindowTable widen_table(const WindowTable& t, int new_radius, const ShiftSystem& system);

/// The cocycle B + h * t, widening B's window if the tangent reads more
/// symbols.  Words the tangent does not list are left untouched.
Cocycle apply_tangent(const Cocycle& a, const Tangent& t, double h, const ShiftSystem& system);

/// Central subword of length 2*radius+1.
Word central_subword(const Word& w, int radius);

/// Witness that the cocycle dominates the base contraction:
/// sup ||A(x)|| ||A(x)^{-1}|| theta^eta <= tau < 1, with the constants that
/// drive every holonomy truncation bound downstream.
struct BunchingCertificate {
    double eta = 1.0;
    double theta = 0.5;
    double tau = 0.0;
    double chain_constant = 1.0;      // C:   ||A^n(y)|| ||A^n(z)^{-1}|| theta^{n eta} <= C tau^n
    double log_ratio_constant = 0.0;  // C1
    double comparison_constant = 0.0; // C2: drives ||H^{n+1} - H^n|| <= C C2 tau^n d^eta
    double sup_norm = 1.0;
    double sup_inv_norm = 1.0;
    double openness_margin = 0.0;     // entry perturbations below this keep bunching
    bool exhaustive = true;           // finite-table max vs declared bounds
};

struct NotFiberBunched : Error {
    NotFiberBunched(std::string msg, Word witness_word, double tau_value)
        : Error(std::move(msg)), witness(std::move(witness_word)), tau(tau_value) {}
    Word witness;
    double tau;
};

BunchingCertificate certify_bunching(const Cocycle& a, const ShiftSystem& system);

/// Built-in long-range test family over the full 2-shift (theta = 1/2):
///   A(x) = exp(g(x) * generator) * M_{x_0},
///   g(x) = sum_{|n| <= influence_radius} 2^{-|n|} weight(x_n),
/// with a skew generator so the exponential factor is an exact rotation.
/// Genuine unbounded-window behaviour for every truncation depth used in
/// practice, with certified Holder data.
struct LongRangeFamily {
    Matrix m0, m1;
    double weight_one = 1.0;     // weight(1); weight(0) = 0
    double generator_scale = 0.1;
    int influence_radius = 48;
};

Cocycle make_long_range_cocycle(const ShiftSystem& system, const LongRangeFamily& family);

/// The standard two-entry window-0 test cocycle over the full 2-shift:
/// {diag(1.2, 0.9), R(0.3) diag(1.1, 1)}.
Cocycle standard_test_cocycle();

Matrix rotation2(double angle);

}  // namespace cocycle_lab
