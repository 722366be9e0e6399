#pragma once

#include "cocycle_lab/criterion.hpp"

namespace cocycle_lab {

/// Finite, cylinder-supported table edit.  Applying then reverting restores
/// the original table bit-exactly.
struct PerturbationPlan {
    enum class Site { periodic, homoclinic };
    Site site = Site::periodic;
    Word support_word;  // the depth-window pattern whose cylinder is edited
    std::map<Word, Matrix> old_entries;
    std::map<Word, Matrix> new_entries;
    double size = 0.0;  // max operator-norm entry change
    Matrix intent;      // target period matrix or target transition map

    bool empty() const { return new_entries.empty(); }
};

struct SupportCollision : Error {
    SupportCollision(std::string msg, SymbolicPoint point)
        : Error(std::move(msg)), colliding(std::move(point)) {}
    SymbolicPoint colliding;
};

/// Applies (or undoes) a plan; widens the table if the plan was computed at
/// a deeper window.
WindowTable apply_plan(const WindowTable& t, const PerturbationPlan& plan,
                       const ShiftSystem& system);
WindowTable revert_plan(const WindowTable& t, const PerturbationPlan& plan,
                        const ShiftSystem& system);

/// Edits the cylinder of depth `depth` at p so that the period matrix at p
/// becomes exactly `target`, leaving every other orbit point's factor
/// untouched.  `avoid` lists points whose depth-cylinders must stay clear of
/// the edit (a homoclinic orbit, typically).
PerturbationPlan perturb_periodic(const Cocycle& a, const ShiftSystem& system,
                                  const SymbolicPoint& p, const Matrix& target, long depth,
                                  const std::vector<SymbolicPoint>& avoid = {});

/// Edits the cylinder of depth `depth` at q so that the transition map of
/// (p, q, m) becomes `target_psi` while the period matrix at p and both
/// holonomies keep their exact pre-edit values (their evaluation points are
/// verified to lie outside the edited cylinder).
PerturbationPlan perturb_homoclinic(const Cocycle& a, const ShiftSystem& system,
                                    const BunchingCertificate& cert, const HomoclinicData& h,
                                    const Matrix& target_psi, long depth, double tol = 1e-9);

struct MakeSimpleResult {
    Cocycle cocycle;
    SimplicityCertificate certificate;
    HomoclinicData witness;
    std::vector<PerturbationPlan> plans;
    std::uint64_t seed = 0;
    double total_change = 0.0;  // sup over entries of the operator-norm change
};

/// Two-stage repair: first make some periodic point pinch (spectrum-spreading
/// edit at p), then twist the transition map (small rotation composed into
/// the entry at q).  The second edit provably leaves the first intact.  Total
/// entry change stays below epsilon and fiber bunching is re-certified.
MakeSimpleResult make_simple(const Cocycle& a, const ShiftSystem& system, double epsilon,
                             double delta_pinch = kDefaultDeltaPinch,
                             double delta_twist = kDefaultDeltaTwist, std::uint64_t seed = 1,
                             double tol = 1e-9);

struct RankProbeReport {
    int rank = 0;
    int expected_rank = 0;
    bool full_rank_asserted = false;  // directions >= expected_rank
    bool full_rank = false;
    RealVector singular_values;
    double threshold = 0.0;
    double max_analytic_discrepancy = 0.0;  // FD columns vs assembled derivative
    int directions = 0;
    double step = 0.0;
    std::uint64_t seed = 0;
};

/// Finite-difference Jacobian of
///   B -> (B^{per(p_i)}(p_i), Psi_{B,p_i,q_i})_{i=1..l}
/// along random tangents supported on the site cylinders.  Reports the
/// numerical rank (singular values above step^{3/2}) and cross-checks a few
/// columns against the assembled analytic derivative.
RankProbeReport submersion_rank_probe(const Cocycle& a, const ShiftSystem& system,
                                      const BunchingCertificate& cert,
                                      const std::vector<HomoclinicData>& sites, int directions,
                                      double step, std::uint64_t seed, bool parallel = true);

/// Derivative of the m-step product at q in the direction t (Leibniz rule).
Matrix product_derivative(const Cocycle& a, const Tangent& t, const SymbolicPoint& q, long m);

/// Derivative of the transition map in the direction t: holonomy-derivative
/// terms on both sides plus the Leibniz middle term.
Matrix transition_map_derivative(const Cocycle& a, const BunchingCertificate& cert,
                                 const ShiftSystem& system, const HomoclinicData& h,
                                 const Tangent& t, double tol = 1e-9);

}  // namespace cocycle_lab
