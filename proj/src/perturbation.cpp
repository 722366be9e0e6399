#include "cocycle_lab/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cocycle_lab {

namespace {

Matrix lu_inverse(const Matrix& m) {
    return m.partialPivLu().solve(Matrix::Identity(m.rows(), m.cols()));
}

/// All points of the (finite) orbit of a periodic point.
std::vector<SymbolicPoint> periodic_orbit(const SymbolicPoint& p) {
    std::vector<SymbolicPoint> orbit;
    for (long j = 0; j < p.period(); ++j) orbit.push_back(p.shifted(j));
    return orbit;
}

/// z lies in the depth-cylinder of `center` iff the windows coincide.
bool in_cylinder(const SymbolicPoint& z, const SymbolicPoint& center, long depth) {
    return z.window(-depth, depth) == center.window(-depth, depth);
}

/// Evaluation points whose cocycle values enter the period matrix at p, the
/// m-step product at q, and both holonomies of the loop (out to the
/// stabilization horizon of a finite window of radius `table_radius`).
std::vector<SymbolicPoint> loop_evaluation_points(const HomoclinicData& h, long table_radius) {
    std::vector<SymbolicPoint> pts = periodic_orbit(h.p);
    const long horizon = table_radius + 4;
    for (long i = 1; i <= h.m + horizon; ++i) pts.push_back(h.q.shifted(i));
    for (long i = 1; i <= horizon; ++i) pts.push_back(h.q.shifted(-i));
    return pts;
}

PerturbationPlan cylinder_right_multiply(const Cocycle& widened, const SymbolicPoint& center,
                                         long depth, const Matrix& right_factor,
                                         PerturbationPlan::Site site, Matrix intent) {
    PerturbationPlan plan;
    plan.site = site;
    plan.support_word = center.window(-depth, depth);
    plan.intent = std::move(intent);
    for (const auto& [w, m] : widened.table().entries) {
        if (central_subword(w, static_cast<int>(depth)) != plan.support_word) continue;
        Matrix next = m * right_factor;
        plan.old_entries[w] = m;
        plan.new_entries[w] = next;
        plan.size = std::max(plan.size, spectral_norm(next - m));
    }
    if (plan.new_entries.empty())
        throw Error("perturbation: no table entry matches the support cylinder");
    return plan;
}

}  // namespace

WindowTable apply_plan(const WindowTable& t, const PerturbationPlan& plan,
                       const ShiftSystem& system) {
    if (plan.empty()) return t;
    const int plan_radius =
        static_cast<int>((plan.new_entries.begin()->first.size() - 1) / 2);
    WindowTable out = plan_radius > t.radius ? widen_table(t, plan_radius, system) : t;
    for (const auto& [w, m] : plan.new_entries) {
        auto it = out.entries.find(w);
        if (it == out.entries.end()) throw Error("apply_plan: word missing from table");
        it->second = m;
    }
    return out;
}

WindowTable revert_plan(const WindowTable& t, const PerturbationPlan& plan,
                        const ShiftSystem&) {
    if (plan.empty()) return t;
    WindowTable out = t;
    for (const auto& [w, m] : plan.old_entries) {
        auto it = out.entries.find(w);
        if (it == out.entries.end()) throw Error("revert_plan: word missing from table");
        it->second = m;
    }
    return out;
}

PerturbationPlan perturb_periodic(const Cocycle& a, const ShiftSystem& system,
                                  const SymbolicPoint& p, const Matrix& target, long depth,
                                  const std::vector<SymbolicPoint>& avoid) {
    if (!a.is_finite_window()) throw Error("perturb_periodic needs a finite-window cocycle");
    if (!p.is_periodic()) throw Error("perturb_periodic: p must be periodic");
    if (smallest_singular_value(target) <= 0.0)
        throw Error("perturb_periodic: target must be invertible");
    if (depth < 0) throw Error("perturb_periodic: negative depth");

    // Orbit cylinders of equal depth are disjoint iff no orbit point lies in
    // another's cylinder.
    auto orbit = periodic_orbit(p);
    for (std::size_t i = 0; i < orbit.size(); ++i)
        for (std::size_t j = 0; j < orbit.size(); ++j)
            if (i != j && in_cylinder(orbit[j], orbit[i], depth))
                throw SupportCollision(
                    "perturb_periodic: depth " + std::to_string(depth) +
                        " does not separate orbit points " + std::to_string(i) + " and " +
                        std::to_string(j),
                    orbit[j]);
    for (const auto& z : avoid)
        for (const auto& o : orbit)
            if (in_cylinder(z, o, depth))
                throw SupportCollision(
                    "perturb_periodic: avoided point lies inside an orbit cylinder", z);

    Matrix period = a.product(p, p.period());
    if (period == target) {  // identity perturbation: empty plan
        PerturbationPlan plan;
        plan.site = PerturbationPlan::Site::periodic;
        plan.support_word = p.window(-depth, depth);
        plan.intent = target;
        return plan;
    }

    Cocycle widened =
        depth > a.window_radius()
            ? a.with_table(widen_table(a.table(), static_cast<int>(depth), system))
            : a;
    Matrix right_factor = lu_inverse(period) * target;
    PerturbationPlan plan = cylinder_right_multiply(widened, p, depth, right_factor,
                                                    PerturbationPlan::Site::periodic, target);

    // The edit is exact by construction; recompute rather than trust.
    Cocycle edited = a.with_table(apply_plan(a.table(), plan, system));
    if (relative_error(edited.product(p, p.period()), target) > 1e-10)
        throw Error("perturb_periodic: recomputed period matrix missed the target");
    return plan;
}

PerturbationPlan perturb_homoclinic(const Cocycle& a, const ShiftSystem& system,
                                    const BunchingCertificate& cert, const HomoclinicData& h,
                                    const Matrix& target_psi, long depth, double tol) {
    if (!a.is_finite_window()) throw Error("perturb_homoclinic needs a finite-window cocycle");
    if (smallest_singular_value(target_psi) <= 0.0)
        throw Error("perturb_homoclinic: target must be invertible");
    if (depth < 0) throw Error("perturb_homoclinic: negative depth");

    const long table_radius = std::max<long>(a.window_radius(), depth);
    for (const auto& z : loop_evaluation_points(h, table_radius))
        if (in_cylinder(z, h.q, depth))
            throw SupportCollision(
                "perturb_homoclinic: holonomy evaluation point lies inside the edited cylinder",
                z);

    TransitionMap current = transition_map(a, cert, h, tol);
    if (current.psi == target_psi) {
        PerturbationPlan plan;
        plan.site = PerturbationPlan::Site::homoclinic;
        plan.support_word = h.q.window(-depth, depth);
        plan.intent = target_psi;
        return plan;
    }

    HolonomyResult hu = unstable_holonomy(a, cert, h.p, h.q, tol);
    HolonomyResult hs = stable_holonomy(a, cert, h.q.shifted(h.m), h.p, tol);
    Matrix am = a.product(h.q, h.m);
    // New value at q: the unique right factor turning the loop product into
    // the target, with everything else frozen.
    Matrix right_factor =
        lu_inverse(am) * lu_inverse(hs.value) * target_psi * lu_inverse(hu.value);

    Cocycle widened =
        depth > a.window_radius()
            ? a.with_table(widen_table(a.table(), static_cast<int>(depth), system))
            : a;
    PerturbationPlan plan = cylinder_right_multiply(widened, h.q, depth, right_factor,
                                                    PerturbationPlan::Site::homoclinic,
                                                    target_psi);

    // Exact-support assertions: the period matrix is bit-identical and the
    // recomputed transition map hits the target.
    Cocycle edited = a.with_table(apply_plan(a.table(), plan, system));
    Matrix period_before = a.product(h.p, h.p.period());
    Matrix period_after = edited.product(h.p, h.p.period());
    if (period_before != period_after)
        throw Error("perturb_homoclinic: the edit touched the period matrix");
    TransitionMap recomputed = transition_map(edited, cert, h, tol);
    if (relative_error(recomputed.psi, target_psi) > 1e-10)
        throw Error("perturb_homoclinic: recomputed transition map missed the target");
    return plan;
}

namespace {

/// First admissible periodic point, shortest word first.
SymbolicPoint first_periodic_point(const ShiftSystem& system, long max_len) {
    for (long len = 1; len <= max_len; ++len) {
        Word w(len, 0);
        for (;;) {
            if (system.word_admissible(w, true)) return make_periodic(w, system);
            long pos = len - 1;
            while (pos >= 0 && w[pos] == system.alphabet_size - 1) w[pos--] = 0;
            if (pos < 0) break;
            ++w[pos];
        }
    }
    throw Error("no admissible periodic word found");
}

/// First admissible connector of length per(p) (then multiples) that differs
/// from the periodic pattern and yields a valid homoclinic datum.
HomoclinicData choose_witness(const SymbolicPoint& p, const ShiftSystem& system) {
    const long per = p.period();
    for (long mult = 1; mult <= 4; ++mult) {
        const long len = per * mult;
        Word c(len, 0);
        for (;;) {
            try {
                return make_homoclinic(p, c, system);
            } catch (const Error&) {
            }
            long pos = len - 1;
            while (pos >= 0 && c[pos] == system.alphabet_size - 1) c[pos--] = 0;
            if (pos < 0) break;
            ++c[pos];
        }
    }
    throw Error("no homoclinic connector found for p");
}

/// Depth that isolates q's cylinder from every loop evaluation point, with
/// the horizon re-checked after widening.
long homoclinic_depth(const HomoclinicData& h, long base_radius) {
    long depth = 0;
    for (int pass = 0; pass < 4; ++pass) {
        long radius = std::max(base_radius, depth);
        auto pts = loop_evaluation_points(h, radius);
        long next = isolating_depth(h.q, pts);
        if (next == depth && pass > 0) return depth;
        depth = next;
    }
    return depth;
}

long periodic_depth(const SymbolicPoint& p, const std::vector<SymbolicPoint>& avoid) {
    auto orbit = periodic_orbit(p);
    long depth = 0;
    for (std::size_t i = 0; i < orbit.size(); ++i) {
        std::vector<SymbolicPoint> others;
        for (std::size_t j = 0; j < orbit.size(); ++j)
            if (j != i) others.push_back(orbit[j]);
        for (const auto& z : avoid) others.push_back(z);
        if (!others.empty()) depth = std::max(depth, isolating_depth(orbit[i], others));
    }
    return depth;
}

}  // namespace

MakeSimpleResult make_simple(const Cocycle& a, const ShiftSystem& system, double epsilon,
                             double delta_pinch, double delta_twist, std::uint64_t seed,
                             double tol) {
    if (!a.is_finite_window()) throw Error("make_simple needs a finite-window cocycle");
    if (!(epsilon > 0.0)) throw Error("make_simple: epsilon must be positive");
    BunchingCertificate cert0 = certify_bunching(a, system);
    const double stage_budget = epsilon / 2.0;
    if (stage_budget > 0.95 * cert0.openness_margin)
        throw Error("make_simple: bunching margin too small to absorb epsilon; max admissible "
                    "epsilon is " +
                    std::to_string(1.9 * cert0.openness_margin));

    Rng rng(seed);
    const bool real_mode = a.field() == ScalarField::real;
    std::vector<PerturbationPlan> plans;

    // Stage 1: a pinching periodic point, by search if one exists, else by a
    // spectrum-spreading edit at a default point.  In real mode a usable
    // edit point needs a real spectrum to begin with (a complex conjugate
    // pair survives every small real perturbation), so the default falls
    // back to the first periodic point whose period matrix has one.
    SymbolicPoint p = first_periodic_point(system, 4);
    bool need_edit = true;
    if (auto hit = search_pinching_point(a, system, 4, delta_pinch, real_mode)) {
        p = hit->first;
        need_edit = false;
    } else if (real_mode) {
        bool found = false;
        for (long len = 1; len <= 4 && !found; ++len) {
            Word w(len, 0);
            for (;;) {
                if (system.word_admissible(w, true)) {
                    SymbolicPoint candidate = make_periodic(w, system);
                    if (candidate.period() == len) {
                        EigenData eig = check_pinching_matrix(
                                            a.product(candidate, len), 0.0, true)
                                            .eigen;
                        if (!eig.defective && eig.conjugate_pairs == 0) {
                            p = candidate;
                            found = true;
                            break;
                        }
                    }
                }
                long pos = len - 1;
                while (pos >= 0 && w[pos] == system.alphabet_size - 1) w[pos--] = 0;
                if (pos < 0) break;
                ++w[pos];
            }
        }
        if (!found)
            throw Error("make_simple: real mode found no periodic point with a real "
                        "spectrum up to period 4");
    }
    HomoclinicData h = choose_witness(p, system);

    Cocycle stage1 = a;
    if (need_edit) {
        Matrix period = a.product(p, p.period());
        const int d = a.dimension();
        std::vector<SymbolicPoint> avoid;
        for (long i = 0; i < h.m; ++i) avoid.push_back(h.q.shifted(i));
        long depth = periodic_depth(p, avoid);

        double spread = 1.0;
        bool done = false;
        for (int attempt = 0; attempt < 16 && !done; ++attempt) {
            Matrix base = period;
            EigenData eig = check_pinching_matrix(base, 0.0, real_mode).eigen;
            for (int nudge = 0; nudge < 8 && eig.defective; ++nudge) {
                base = period + (1e-6 * spectral_norm(period)) *
                                    random_gaussian(d, d, a.field(), rng);
                eig = check_pinching_matrix(base, 0.0, real_mode).eigen;
            }
            if (eig.defective) throw Error("make_simple: could not diagonalize a nudged copy");
            if (real_mode) {
                bool all_real = true;
                for (int i = 0; i < d; ++i)
                    if (std::abs(eig.values(i).imag()) >
                        1e-9 * std::abs(eig.values(0)))
                        all_real = false;
                if (!all_real)
                    throw Error("make_simple: real mode edit point lost its real spectrum");
            }
            Eigen::VectorXcd scaled = eig.values;
            for (int i = 0; i < d; ++i) {
                double t = d == 1 ? 1.0 : 1.0 - 2.0 * i / static_cast<double>(d - 1);
                scaled(i) = eig.values(i) * (1.0 + 0.25 * epsilon * spread * t);
            }
            Matrix target =
                eig.vectors * scaled.asDiagonal() * lu_inverse(eig.vectors);
            if (real_mode) target = (target + target.conjugate()) / 2.0;
            if (!check_pinching_matrix(target, delta_pinch, real_mode).pinching) {
                if (spread < 1e-4)
                    throw Error("make_simple: epsilon too small to open a pinching gap above "
                                "delta_pinch");
                continue;  // fresh nudge
            }
            PerturbationPlan plan = perturb_periodic(a, system, p, target, depth, avoid);
            if (plan.size > stage_budget) {
                spread /= 2.0;
                continue;
            }
            stage1 = a.with_table(apply_plan(a.table(), plan, system));
            plans.push_back(std::move(plan));
            done = true;
        }
        if (!done) throw Error("make_simple: pinching stage exhausted its retries");
    }

    // Stage 2: recompute the transition map on the stage-1 cocycle and twist
    // it by a small random rotation if needed.
    BunchingCertificate cert1 = certify_bunching(stage1, system);
    PinchingReport pin = check_pinching(stage1, p, delta_pinch, real_mode);
    if (!pin.pinching) throw Error("make_simple: stage 1 failed to establish pinching");

    Cocycle stage2 = stage1;
    TransitionMap psi = transition_map(stage1, cert1, h, tol);
    TwistingReport tw = check_twisting(pin.eigen, psi, delta_twist);
    if (!tw.twisting) {
        long depth = homoclinic_depth(h, stage1.window_radius());
        double psi_norm = spectral_norm(psi.psi);
        double angle_cap = std::min(0.4, stage_budget / (4.0 * psi_norm * cert1.sup_norm *
                                                         cert1.sup_inv_norm));
        std::ostringstream margins;
        bool done = false;
        for (int attempt = 0; attempt < 16 && !done; ++attempt) {
            double angle = rng.uniform(0.25 * angle_cap, angle_cap);
            Matrix g = random_small_rotation(stage1.dimension(), angle, stage1.field(), rng);
            Matrix target = g * psi.psi;
            PerturbationPlan plan = perturb_homoclinic(stage1, system, cert1, h, target, depth, tol);
            if (plan.size > stage_budget) {
                angle_cap /= 2.0;
                continue;
            }
            Cocycle candidate = stage1.with_table(apply_plan(stage1.table(), plan, system));
            TransitionMap psi2 = transition_map(candidate, cert1, h, tol);
            TwistingReport tw2 = check_twisting(pin.eigen, psi2, delta_twist);
            margins << tw2.margin << " ";
            if (tw2.twisting) {
                stage2 = candidate;
                plans.push_back(std::move(plan));
                done = true;
            }
        }
        if (!done)
            throw Error("make_simple: twisting retries exhausted; margins seen: " +
                        margins.str());
    }

    SimplicityCertificate certificate =
        certify_simple(stage2, system, h, delta_pinch, delta_twist, tol, real_mode);
    if (certificate.verdict != Verdict::simple)
        throw Error("make_simple: final certificate is " + to_string(certificate.verdict));

    // Total change against the original table, compared through the central
    // subword of any widened entry.
    double total = 0.0;
    for (const auto& [w, m] : stage2.table().entries) {
        const Matrix& orig = a.table().at(central_subword(w, a.window_radius()));
        total = std::max(total, spectral_norm(m - orig));
    }
    if (total > epsilon)
        throw Error("make_simple: total entry change " + std::to_string(total) +
                    " exceeds epsilon");
    return MakeSimpleResult{std::move(stage2), std::move(certificate), std::move(h),
                            std::move(plans), seed, total};
}

Matrix product_derivative(const Cocycle& a, const Tangent& t, const SymbolicPoint& q, long m) {
    const int d = a.dimension();
    Matrix sum = Matrix::Zero(d, d);
    for (long j = 0; j < m; ++j) {
        Matrix left = Matrix::Identity(d, d);
        for (long i = j + 1; i < m; ++i) left = a.evaluate(q.shifted(i)) * left;
        Matrix right = a.product(q, j);
        sum += left * t.evaluate(q.shifted(j)) * right;
    }
    return sum;
}

Matrix transition_map_derivative(const Cocycle& a, const BunchingCertificate& cert,
                                 const ShiftSystem& system, const HomoclinicData& h,
                                 const Tangent& t, double tol) {
    SymbolicPoint fmq = h.q.shifted(h.m);
    Matrix hs = stable_holonomy(a, cert, fmq, h.p, tol).value;
    Matrix hu = unstable_holonomy(a, cert, h.p, h.q, tol).value;
    Matrix am = a.product(h.q, h.m);

    Matrix dhs = stable_holonomy_derivative(a, cert, t, system, fmq, h.p, tol);
    Matrix dhu = unstable_holonomy_derivative(a, cert, t, system, h.p, h.q, tol);
    Matrix dam = product_derivative(a, t, h.q, h.m);
    return dhs * am * hu + hs * dam * hu + hs * am * dhu;
}

namespace {

struct SiteSupport {
    Word p_word, q_word;
    long depth = 0;
};

}  // namespace

RankProbeReport submersion_rank_probe(const Cocycle& a, const ShiftSystem& system,
                                      const BunchingCertificate& cert,
                                      const std::vector<HomoclinicData>& sites, int directions,
                                      double step, std::uint64_t seed, bool parallel) {
    (void)cert;  // finite-window evaluation is exact; constants are not consulted
    if (!a.is_finite_window()) throw Error("rank probe needs a finite-window cocycle");
    if (sites.empty()) throw Error("rank probe needs at least one site");
    if (!(step >= 1e-7 && step <= 1e-3))
        throw Error("rank probe: step must lie in [1e-7, 1e-3]");
    if (directions < 1) throw Error("rank probe: directions must be positive");

    const int d = a.dimension();
    const int l = static_cast<int>(sites.size());

    // Per-site depth requirements first: orbit separation at p (with the
    // homoclinic orbit avoided) and loop-point isolation at q.  Within-site
    // couplings through the p-support are triangular and harmless; what must
    // be ruled out is any contact BETWEEN sites, so the common depth is
    // deepened until every site's evaluation points clear every other
    // site's supports.
    long depth = 0;
    for (const auto& h : sites) {
        std::vector<SymbolicPoint> q_orbit;
        for (long i = 0; i < h.m; ++i) q_orbit.push_back(h.q.shifted(i));
        depth = std::max(depth, periodic_depth(h.p, q_orbit));
        depth = std::max(depth, homoclinic_depth(h, a.window_radius()));
    }

    std::vector<SiteSupport> supports(sites.size());
    long radius = 0;
    for (long trial_depth = depth;; ++trial_depth) {
        if (trial_depth > depth + 12)
            throw SupportCollision("rank probe: sites could not be separated", sites[0].q);
        radius = std::max<long>(a.window_radius(), trial_depth);
        for (std::size_t i = 0; i < sites.size(); ++i) {
            supports[i].depth = trial_depth;
            supports[i].p_word = sites[i].p.window(-trial_depth, trial_depth);
            supports[i].q_word = sites[i].q.window(-trial_depth, trial_depth);
        }
        bool clean = true;
        for (std::size_t i = 0; i < sites.size() && clean; ++i)
            for (std::size_t j = 0; j < sites.size() && clean; ++j) {
                if (i == j) continue;
                if (supports[i].p_word == supports[j].p_word ||
                    supports[i].p_word == supports[j].q_word ||
                    supports[i].q_word == supports[j].q_word)
                    clean = false;
            }
        for (std::size_t i = 0; i < sites.size() && clean; ++i) {
            auto pts = loop_evaluation_points(sites[i], radius);
            pts.push_back(sites[i].p);
            pts.push_back(sites[i].q);
            for (const auto& z : pts) {
                Word zw = z.window(-trial_depth, trial_depth);
                for (std::size_t j = 0; j < sites.size() && clean; ++j) {
                    if (j == i) continue;
                    if (zw == supports[j].p_word || zw == supports[j].q_word) clean = false;
                }
            }
        }
        if (clean) {
            depth = trial_depth;
            break;
        }
    }

    Cocycle wide = radius > a.window_radius()
                       ? a.with_table(widen_table(a.table(), static_cast<int>(radius), system))
                       : a;

    // One tangent per direction, Gaussian entries on the support words.
    auto make_direction = [&](int k) {
        Rng drng(derive_seed(seed, static_cast<std::uint64_t>(k)));
        Tangent t;
        t.dimension = d;
        t.table.radius = static_cast<int>(depth);
        double max_norm = 0.0;
        for (const auto& s : supports) {
            t.table.entries[s.p_word] = random_gaussian(d, d, a.field(), drng);
            t.table.entries[s.q_word] = random_gaussian(d, d, a.field(), drng);
        }
        for (const auto& [w, m] : t.table.entries) max_norm = std::max(max_norm, spectral_norm(m));
        for (auto& [w, m] : t.table.entries) m /= max_norm;
        return t;
    };

    const int out_rows = 2 * l * d * d;
    Matrix jac(out_rows, directions);

    auto theta_of = [&](const Cocycle& b) {
        Eigen::VectorXcd out(out_rows);
        BunchingCertificate bc = certify_bunching(b, system);
        int at = 0;
        for (const auto& h : sites) {
            Matrix period = b.product(h.p, h.p.period());
            Matrix psi = transition_map(b, bc, h, 1e-11).psi;
            for (int c = 0; c < d; ++c)
                for (int r = 0; r < d; ++r) out(at++) = period(r, c);
            for (int c = 0; c < d; ++c)
                for (int r = 0; r < d; ++r) out(at++) = psi(r, c);
        }
        return out;
    };

    auto column = [&](int k) {
        Tangent t = make_direction(k);
        Cocycle plus = apply_tangent(wide, t, step, system);
        Cocycle minus = apply_tangent(wide, t, -step, system);
        return Eigen::VectorXcd(((theta_of(plus) - theta_of(minus)) / (2.0 * step)));
    };

#ifdef _OPENMP
    int threads = parallel ? (thread_cap() > 0 ? std::min(thread_cap(), omp_get_max_threads())
                                               : omp_get_max_threads())
                           : 1;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int k = 0; k < directions; ++k) jac.col(k) = column(k);
#else
    for (int k = 0; k < directions; ++k) jac.col(k) = column(k);
#endif

    RankProbeReport rep;
    rep.expected_rank = 2 * l * d * d;
    rep.directions = directions;
    rep.step = step;
    rep.seed = seed;
    rep.threshold = std::pow(step, 1.5);

    Eigen::JacobiSVD<Matrix> svd(jac);
    rep.singular_values = svd.singularValues();
    for (int i = 0; i < rep.singular_values.size(); ++i)
        if (rep.singular_values(i) > rep.threshold) ++rep.rank;
    rep.full_rank_asserted = directions >= rep.expected_rank;
    rep.full_rank = rep.full_rank_asserted && rep.rank == rep.expected_rank;

    // Analytic cross-check on a few columns.
    int checks = std::min(3, directions);
    for (int k = 0; k < checks; ++k) {
        Tangent t = make_direction(k);
        BunchingCertificate wc = certify_bunching(wide, system);
        Eigen::VectorXcd analytic(out_rows);
        int at = 0;
        for (const auto& h : sites) {
            Matrix dperiod = product_derivative(wide, t, h.p, h.p.period());
            Matrix dpsi = transition_map_derivative(wide, wc, system, h, t, 1e-11);
            for (int c = 0; c < d; ++c)
                for (int r = 0; r < d; ++r) analytic(at++) = dperiod(r, c);
            for (int c = 0; c < d; ++c)
                for (int r = 0; r < d; ++r) analytic(at++) = dpsi(r, c);
        }
        double scale = std::max(1.0, analytic.norm());
        rep.max_analytic_discrepancy =
            std::max(rep.max_analytic_discrepancy, (jac.col(k) - analytic).norm() / scale);
    }
    return rep;
}

}  // namespace cocycle_lab
