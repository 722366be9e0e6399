#include "cocycle_lab/criterion.hpp"

#include <algorithm>
#include <cmath>

namespace cocycle_lab {

namespace {

constexpr double kDefectiveBasisCondition = 1e8;

EigenData eigen_data_of(const Matrix& m, bool real_mode) {
    Eigen::ComplexEigenSolver<Matrix> solver(m);
    if (solver.info() != Eigen::Success) throw Error("eigensolver failed on the period matrix");
    const int d = static_cast<int>(m.rows());

    std::vector<int> order(d);
    for (int i = 0; i < d; ++i) order[i] = i;
    auto vals = solver.eigenvalues();
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        double ai = std::abs(vals(i)), aj = std::abs(vals(j));
        if (ai != aj) return ai > aj;
        return std::arg(vals(i)) < std::arg(vals(j));  // deterministic tie-break
    });

    EigenData e;
    e.values.resize(d);
    e.vectors.resize(d, d);
    for (int i = 0; i < d; ++i) {
        e.values(i) = vals(order[i]);
        Eigen::VectorXcd v = solver.eigenvectors().col(order[i]);
        e.vectors.col(i) = v / v.norm();
    }
    double smin = smallest_singular_value(e.vectors);
    e.basis_condition = smin > 0.0 ? spectral_norm(e.vectors) / smin : 1.0 / 0.0;
    e.defective = !(e.basis_condition < kDefectiveBasisCondition);

    if (real_mode) {
        // Conjugate pairs: nonreal eigenvalues come in conjugate couples for
        // real matrices; count couples among the sorted values.
        std::vector<bool> used(d, false);
        double scale = std::abs(e.values(0)) + 1e-300;
        for (int i = 0; i < d; ++i) {
            if (used[i] || std::abs(e.values(i).imag()) <= 1e-12 * scale) continue;
            for (int j = i + 1; j < d; ++j) {
                if (used[j]) continue;
                if (std::abs(e.values(j) - std::conj(e.values(i))) <= 1e-9 * scale) {
                    used[i] = used[j] = true;
                    ++e.conjugate_pairs;
                    break;
                }
            }
        }
    }
    return e;
}

}  // namespace

PinchingReport check_pinching_matrix(const Matrix& period_matrix, double delta_pinch,
                                     bool real_mode) {
    PinchingReport rep;
    rep.eigen = eigen_data_of(period_matrix, real_mode);
    const int d = static_cast<int>(period_matrix.rows());

    if (rep.eigen.defective) {
        rep.pinching = false;
        rep.margin = 0.0;
        rep.diagnostic = "period matrix numerically defective (eigenbasis condition " +
                         std::to_string(rep.eigen.basis_condition) + ")";
        return rep;
    }

    double margin = 1.0;
    for (int i = 0; i + 1 < d; ++i) {
        double hi = std::abs(rep.eigen.values(i)), lo = std::abs(rep.eigen.values(i + 1));
        margin = std::min(margin, (hi - lo) / hi);
    }
    if (d == 1) margin = 1.0;
    rep.margin = std::max(margin, 0.0);
    rep.pinching = rep.margin > delta_pinch;

    if (real_mode) {
        bool all_real = true;
        double scale = std::abs(rep.eigen.values(0)) + 1e-300;
        for (int i = 0; i < d; ++i)
            if (std::abs(rep.eigen.values(i).imag()) > 1e-9 * scale) all_real = false;
        if (!all_real) {
            rep.pinching = false;
            rep.diagnostic = "real mode: " + std::to_string(rep.eigen.conjugate_pairs) +
                             " complex conjugate pair(s) present";
        }
    }
    return rep;
}

PinchingReport check_pinching(const Cocycle& a, const SymbolicPoint& p, double delta_pinch,
                              bool real_mode) {
    if (!p.is_periodic()) throw Error("check_pinching: p must be periodic");
    return check_pinching_matrix(a.product(p, p.period()), delta_pinch, real_mode);
}

TransitionMap transition_map(const Cocycle& a, const BunchingCertificate& cert,
                             const HomoclinicData& h, double tol) {
    if (!h.p.is_periodic()) throw Error("transition_map: p must be periodic");
    if (h.m <= 0 || h.m % h.p.period() != 0)
        throw Error("transition_map: m must be a positive multiple of per(p)");
    SymbolicPoint fmq = h.q.shifted(h.m);
    // Preconditions of the two holonomies: q below p, f^m(q) above p.
    if (!agree_on_left(h.p, h.q))
        throw Error("transition_map: q is not in the local unstable set of p");
    if (!agree_on_right(fmq, h.p))
        throw Error("transition_map: f^m(q) is not in the local stable set of p");

    HolonomyResult hu = unstable_holonomy(a, cert, h.p, h.q, tol);
    HolonomyResult hs = stable_holonomy(a, cert, fmq, h.p, tol);
    Matrix am = a.product(h.q, h.m);

    TransitionMap out;
    out.psi = hs.value * am * hu.value;
    // First-order propagation plus the cross term.
    double nam = spectral_norm(am);
    out.error_bound = hs.error_bound * nam * (spectral_norm(hu.value) + hu.error_bound) +
                      spectral_norm(hs.value) * nam * hu.error_bound;
    if (smallest_singular_value(out.psi) <= 0.0)
        throw Error("transition_map: psi is singular");
    return out;
}

TwistingReport check_twisting(const EigenData& eigen, const TransitionMap& psi,
                              double delta_twist) {
    if (eigen.defective)
        throw Error("check_twisting: pinching precondition fails (defective eigenbasis)");
    const int d = static_cast<int>(eigen.values.size());

    TwistingReport rep;
    rep.margin = 1.0 / 0.0;

    std::vector<int> I, J;
    double min_column_norm = 1.0 / 0.0;
    // All index sets I, J with |I| + |J| = d, including the empty ones.
    for (int mask_i = 0; mask_i < (1 << d); ++mask_i) {
        const int size_i = __builtin_popcount(static_cast<unsigned>(mask_i));
        for (int mask_j = 0; mask_j < (1 << d); ++mask_j) {
            if (size_i + __builtin_popcount(static_cast<unsigned>(mask_j)) != d) continue;
            Matrix assembled(d, d);
            int col = 0;
            I.clear();
            J.clear();
            for (int i = 0; i < d; ++i)
                if (mask_i & (1 << i)) {
                    Eigen::VectorXcd v = psi.psi * eigen.vectors.col(i);
                    min_column_norm = std::min(min_column_norm, v.norm());
                    assembled.col(col++) = v / v.norm();
                    I.push_back(i);
                }
            for (int j = 0; j < d; ++j)
                if (mask_j & (1 << j)) {
                    assembled.col(col++) = eigen.vectors.col(j);
                    J.push_back(j);
                }
            double sv = smallest_singular_value(assembled);
            if (sv < rep.margin) {
                rep.margin = sv;
                rep.worst_I = I;
                rep.worst_J = J;
            }
        }
    }

    // A perturbation of psi by e moves each normalized column psi*v/|psi*v|
    // by at most 2|e|/|psi*v|, hence the smallest singular value by at most
    // sqrt(d) times that.
    if (psi.error_bound > 0.0 && min_column_norm < 1.0 / 0.0)
        rep.propagated_error =
            2.0 * std::sqrt(static_cast<double>(d)) * psi.error_bound / min_column_norm;
    rep.twisting = rep.margin > delta_twist + rep.propagated_error;
    return rep;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::simple: return "simple";
        case Verdict::not_pinching: return "not-pinching";
        case Verdict::not_twisting: return "not-twisting";
    }
    return "?";
}

SimplicityCertificate certify_simple(const Cocycle& a, const ShiftSystem& system,
                                     const HomoclinicData& h, double delta_pinch,
                                     double delta_twist, double tol, bool real_mode) {
    SimplicityCertificate cert;
    cert.p = h.p;
    cert.q = h.q;
    cert.m = h.m;
    cert.delta_pinch = delta_pinch;
    cert.delta_twist = delta_twist;
    cert.bunching = certify_bunching(a, system);

    cert.period_matrix = a.product(h.p, h.p.period());
    PinchingReport pin = check_pinching_matrix(cert.period_matrix, delta_pinch, real_mode);
    cert.eigen_data = pin.eigen;
    cert.pinching_margin = pin.margin;
    if (!pin.pinching) {
        cert.verdict = Verdict::not_pinching;
        return cert;
    }

    TransitionMap psi = transition_map(a, cert.bunching, h, tol);
    cert.psi = psi.psi;
    cert.holonomy_error_budget = psi.error_bound;
    TwistingReport tw = check_twisting(pin.eigen, psi, delta_twist);
    cert.twisting_margin = tw.margin;
    cert.verdict = tw.twisting ? Verdict::simple : Verdict::not_twisting;
    return cert;
}

std::optional<std::pair<SymbolicPoint, double>> search_pinching_point(
    const Cocycle& a, const ShiftSystem& system, long max_period, double delta_pinch,
    bool real_mode) {
    Word w;
    std::function<std::optional<std::pair<SymbolicPoint, double>>(long)> scan =
        [&](long len) -> std::optional<std::pair<SymbolicPoint, double>> {
        w.assign(len, 0);
        // Lexicographic enumeration of words of this length.
        for (;;) {
            bool primitive = true;
            {
                // Skip words that are proper powers; their periodic points
                // were already visited at a shorter length.
                for (long p = 1; p < len && primitive; ++p) {
                    if (len % p) continue;
                    bool rep = true;
                    for (long i = p; i < len && rep; ++i) rep = w[i] == w[i % p];
                    if (rep) primitive = false;
                }
            }
            if (primitive && system.word_admissible(w, /*wrap=*/true)) {
                SymbolicPoint p = make_periodic(w, system);
                PinchingReport rep = check_pinching(a, p, delta_pinch, real_mode);
                if (rep.pinching) return std::make_pair(p, rep.margin);
            }
            long pos = len - 1;
            while (pos >= 0 && w[pos] == system.alphabet_size - 1) w[pos--] = 0;
            if (pos < 0) return std::nullopt;
            ++w[pos];
        }
    };
    for (long len = 1; len <= max_period; ++len)
        if (auto hit = scan(len)) return hit;
    return std::nullopt;
}

}  // namespace cocycle_lab
