#include "cocycle_lab/cocycle.hpp"

#include <cmath>

namespace cocycle_lab {

namespace {

void validate_table(int dimension, ScalarField field, const WindowTable& t, bool invertible) {
    const std::size_t len = 2 * static_cast<std::size_t>(t.radius) + 1;
    if (t.radius < 0) throw Error("window radius must be nonnegative");
    for (const auto& [w, m] : t.entries) {
        if (w.size() != len)
            throw Error("table word '" + word_to_string(w) + "' has wrong length");
        if (m.rows() != dimension || m.cols() != dimension)
            throw Error("table entry for '" + word_to_string(w) + "' has wrong shape");
        if (field == ScalarField::real && !is_real(m, 0.0))
            throw Error("real-mode table entry for '" + word_to_string(w) +
                        "' has nonzero imaginary part");
        // Induced tables legitimately hold long products with huge condition
        // numbers, so only exact singularity is rejected here.
        if (invertible && !(smallest_singular_value(m) > 0.0))
            throw Error("table entry for '" + word_to_string(w) + "' is not invertible");
    }
}

/// Largest N >= 0 such that two equal-length window words agree on all
/// coordinates -N <= i < N (positions are coordinates -radius..radius).
long word_agreement_radius(const Word& u, const Word& v, int radius) {
    for (long n = 0;; ++n) {
        long lo = -n - 1, hi = n;  // extending [-n, n) to [-n-1, n+1)
        if (lo < -radius || hi > radius) return n;
        if (u[hi + radius] != v[hi + radius] || u[lo + radius] != v[lo + radius]) return n;
    }
}

}  // namespace

const Matrix& WindowTable::at(const Word& w) const {
    auto it = entries.find(w);
    if (it == entries.end())
        throw Error("window word '" + word_to_string(w) + "' absent from table (inadmissible)");
    return it->second;
}

const Matrix* WindowTable::find(const Word& w) const {
    auto it = entries.find(w);
    return it == entries.end() ? nullptr : &it->second;
}

Cocycle Cocycle::finite_window(int dimension, ScalarField field, WindowTable table, double eta) {
    if (dimension < 1) throw Error("dimension must be positive");
    if (!(eta > 0.0 && eta <= 1.0)) throw Error("eta must lie in (0, 1]");
    if (table.entries.empty()) throw Error("empty cocycle table");
    validate_table(dimension, field, table, /*invertible=*/true);
    Cocycle c;
    c.dimension_ = dimension;
    c.field_ = field;
    c.eta_ = eta;
    c.table_ = std::move(table);
    return c;
}

Cocycle Cocycle::long_range(int dimension, ScalarField field, LongRangeSpec spec, double eta) {
    if (dimension < 1) throw Error("dimension must be positive");
    if (!(eta > 0.0 && eta <= 1.0)) throw Error("eta must lie in (0, 1]");
    if (!spec.evaluator) throw Error("long-range cocycle needs an evaluator");
    if (!(spec.holder_constant >= 0.0) || !(spec.sup_norm > 0.0) || !(spec.sup_inv_norm > 0.0))
        throw Error("long-range cocycle needs declared regularity bounds");
    Cocycle c;
    c.dimension_ = dimension;
    c.field_ = field;
    c.eta_ = eta;
    c.long_range_ = std::make_shared<LongRangeSpec>(std::move(spec));
    return c;
}

int Cocycle::window_radius() const {
    if (!is_finite_window()) throw Error("window_radius() on a long-range cocycle");
    return table_.radius;
}

const WindowTable& Cocycle::table() const {
    if (!is_finite_window()) throw Error("table() on a long-range cocycle");
    return table_;
}

const LongRangeSpec& Cocycle::long_range_spec() const {
    if (is_finite_window()) throw Error("long_range_spec() on a finite-window cocycle");
    return *long_range_;
}

Matrix Cocycle::evaluate(const SymbolicPoint& x) const {
    if (is_finite_window()) return table_.at(x.window(-table_.radius, table_.radius));
    return long_range_->evaluator(x);
}

Matrix Cocycle::product(const SymbolicPoint& x, long n) const {
    if (n == 0) return Matrix::Identity(dimension_, dimension_);
    if (n < 0) {
        Matrix forward = product(x.shifted(n), -n);
        return forward.partialPivLu().solve(Matrix::Identity(dimension_, dimension_));
    }
    Matrix acc = evaluate(x);
    for (long j = 1; j < n; ++j) acc = evaluate(x.shifted(j)) * acc;
    return acc;
}

Cocycle Cocycle::with_table(WindowTable table) const {
    return finite_window(dimension_, field_, std::move(table), eta_);
}

Cocycle Cocycle::scaled(double c) const {
    if (!(c > 0.0)) throw Error("scale factor must be positive");
    if (is_finite_window()) {
        WindowTable t = table_;
        for (auto& [w, m] : t.entries) m *= c;
        return finite_window(dimension_, field_, std::move(t), eta_);
    }
    LongRangeSpec spec = *long_range_;
    auto inner = long_range_->evaluator;
    spec.evaluator = [inner, c](const SymbolicPoint& x) { return Matrix(c * inner(x)); };
    spec.sup_norm *= c;
    spec.sup_inv_norm /= c;
    spec.holder_constant *= c;
    return long_range(dimension_, field_, std::move(spec), eta_);
}

Tangent Tangent::zero(int dimension, int radius) {
    Tangent t;
    t.dimension = dimension;
    t.table.radius = radius;
    return t;
}

bool Tangent::is_zero() const {
    for (const auto& [w, m] : table.entries)
        if (m.cwiseAbs().maxCoeff() > 0.0) return false;
    return true;
}

Matrix Tangent::evaluate(const SymbolicPoint& x) const {
    const Matrix* m = table.find(x.window(-table.radius, table.radius));
    if (m) return *m;
    return Matrix::Zero(dimension, dimension);
}

HolderData holder_data(const Cocycle& a, const ShiftSystem& system) {
    HolderData h;
    h.eta = a.eta();
    if (!a.is_finite_window()) {
        const auto& s = a.long_range_spec();
        h.log_ratio_constant =
            std::max(s.holder_constant * s.sup_inv_norm,
                     s.holder_constant * s.sup_norm * s.sup_inv_norm * s.sup_inv_norm);
        h.comparison_constant = s.holder_constant * s.sup_inv_norm;
        return h;
    }

    const auto& t = a.table();
    const double theta = system.theta;
    struct Cached {
        const Word* w;
        Matrix inv;
        double norm, inv_norm;
    };
    std::vector<Cached> cache;
    cache.reserve(t.entries.size());
    const Matrix id = Matrix::Identity(a.dimension(), a.dimension());
    for (const auto& [w, m] : t.entries) {
        Cached c;
        c.w = &w;
        c.inv = m.partialPivLu().solve(id);
        c.norm = spectral_norm(m);
        c.inv_norm = spectral_norm(c.inv);
        cache.push_back(std::move(c));
    }

    double c1 = 0.0, c2 = 0.0;
    for (std::size_t i = 0; i < cache.size(); ++i) {
        for (std::size_t j = i + 1; j < cache.size(); ++j) {
            long n = word_agreement_radius(*cache[i].w, *cache[j].w, t.radius);
            double dmin = std::pow(theta, static_cast<double>(n) * a.eta());
            double ratio = std::max(std::abs(std::log(cache[i].norm / cache[j].norm)),
                                    std::abs(std::log(cache[i].inv_norm / cache[j].inv_norm)));
            c1 = std::max(c1, ratio / dmin);
            const Matrix& mi = t.entries.at(*cache[i].w);
            const Matrix& mj = t.entries.at(*cache[j].w);
            double cmp = std::max({spectral_norm(cache[i].inv * mj - id),
                                   spectral_norm(cache[j].inv * mi - id),
                                   spectral_norm(mj * cache[i].inv - id),
                                   spectral_norm(mi * cache[j].inv - id)});
            c2 = std::max(c2, cmp / dmin);
        }
    }
    h.log_ratio_constant = c1;
    h.comparison_constant = c2;
    return h;
}

double tangent_norm(const Tangent& t, const ShiftSystem& system, double eta) {
    double sup = 0.0;
    for (const auto& [w, m] : t.table.entries) sup = std::max(sup, spectral_norm(m));
    // A word absent from the table acts as zero, so compare all entries with
    // each other and with zero.
    double holder = 0.0;
    const double theta = system.theta;
    std::vector<const Word*> words;
    std::vector<double> norms;
    for (const auto& [w, m] : t.table.entries) {
        words.push_back(&w);
        norms.push_back(spectral_norm(m));
    }
    for (std::size_t i = 0; i < words.size(); ++i) {
        holder = std::max(holder, norms[i]);  // against an implicit zero word
        for (std::size_t j = i + 1; j < words.size(); ++j) {
            long n = word_agreement_radius(*words[i], *words[j], t.table.radius);
            double dmin = std::pow(theta, static_cast<double>(n) * eta);
            holder = std::max(holder, spectral_norm(t.table.entries.at(*words[i]) -
                                                    t.table.entries.at(*words[j])) /
                                          dmin);
        }
    }
    return sup + holder;
}

BunchingCertificate certify_bunching(const Cocycle& a, const ShiftSystem& system) {
    BunchingCertificate cert;
    cert.eta = a.eta();
    cert.theta = system.theta;
    const double theta_eta = std::pow(system.theta, a.eta());

    if (a.is_finite_window()) {
        const auto& t = a.table();
        double tau = 0.0, sup = 0.0, sup_inv = 0.0, margin = 0.0;
        const Word* witness = nullptr;
        bool first = true;
        for (const auto& [w, m] : t.entries) {
            auto sv = Eigen::JacobiSVD<Matrix>(m).singularValues();
            double norm = sv(0), inv_norm = 1.0 / sv(sv.size() - 1);
            double local = norm * inv_norm * theta_eta;
            if (local > tau) {
                tau = local;
                witness = &w;
            }
            sup = std::max(sup, norm);
            sup_inv = std::max(sup_inv, inv_norm);
            double m_margin = (1.0 - local) / (inv_norm * (1.0 + theta_eta));
            margin = first ? m_margin : std::min(margin, m_margin);
            first = false;
        }
        if (tau >= 1.0)
            throw NotFiberBunched("not fiber bunched: ||A|| ||A^-1|| theta^eta = " +
                                      std::to_string(tau) + " >= 1 at word '" +
                                      word_to_string(*witness) + "'",
                                  *witness, tau);
        cert.tau = tau;
        cert.sup_norm = sup;
        cert.sup_inv_norm = sup_inv;
        cert.openness_margin = margin;
        HolderData h = holder_data(a, system);
        cert.log_ratio_constant = h.log_ratio_constant;
        cert.comparison_constant = h.comparison_constant;
        cert.chain_constant = std::exp(h.log_ratio_constant * 2.0 / (1.0 - theta_eta));
        cert.exhaustive = true;
        return cert;
    }

    const auto& s = a.long_range_spec();
    double tau = s.sup_norm * s.sup_inv_norm * theta_eta;
    if (tau >= 1.0)
        throw NotFiberBunched("not fiber bunched (declared bounds): tau = " + std::to_string(tau),
                              {}, tau);
    cert.tau = tau;
    cert.sup_norm = s.sup_norm;
    cert.sup_inv_norm = s.sup_inv_norm;
    cert.openness_margin = (1.0 - tau) / (s.sup_inv_norm * (1.0 + theta_eta));
    HolderData h = holder_data(a, system);
    cert.log_ratio_constant = h.log_ratio_constant;
    cert.comparison_constant = h.comparison_constant;
    cert.chain_constant = std::exp(h.log_ratio_constant * 2.0 / (1.0 - theta_eta));
    cert.exhaustive = false;
    return cert;
}

Word central_subword(const Word& w, int radius) {
    const long len = 2L * radius + 1;
    const long mid = static_cast<long>(w.size()) / 2;
    if (static_cast<long>(w.size()) < len)
        throw Error("central_subword: word shorter than requested window");
    return Word(w.begin() + (mid - radius), w.begin() + (mid + radius + 1));
}

WindowTable widen_table(const WindowTable& t, int new_radius, const ShiftSystem& system) {
    if (new_radius <= t.radius) return t;
    WindowTable wide;
    wide.radius = new_radius;
    Word w(2 * new_radius + 1, 0);
    std::function<void(std::size_t)> fill = [&](std::size_t pos) {
        if (pos == w.size()) {
            if (!system.word_admissible(w)) return;
            if (const Matrix* m = t.find(central_subword(w, t.radius))) wide.entries[w] = *m;
            return;
        }
        for (int s = 0; s < system.alphabet_size; ++s) {
            w[pos] = s;
            fill(pos + 1);
        }
    };
    fill(0);
    return wide;
}

Cocycle apply_tangent(const Cocycle& a, const Tangent& t, double h, const ShiftSystem& system) {
    if (!a.is_finite_window()) throw Error("apply_tangent needs a finite-window cocycle");
    if (t.dimension != a.dimension()) throw Error("apply_tangent: dimension mismatch");
    WindowTable table = widen_table(a.table(), t.table.radius, system);
    for (auto& [w, m] : table.entries) {
        if (const Matrix* dm = t.table.find(central_subword(w, t.table.radius))) m += h * (*dm);
    }
    return a.with_table(std::move(table));
}

Matrix rotation2(double angle) {
    Matrix r(2, 2);
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return r;
}

Cocycle make_long_range_cocycle(const ShiftSystem& system, const LongRangeFamily& family) {
    if (system.alphabet_size != 2 || system.theta != 0.5)
        throw Error("long-range family is defined over the full 2-shift with theta = 1/2");
    if (family.m0.rows() != 2 || family.m1.rows() != 2)
        throw Error("long-range family uses 2x2 matrices");

    const Matrix m0 = family.m0, m1 = family.m1;
    const double w1 = family.weight_one;
    const double scale = family.generator_scale;
    const int k = family.influence_radius;

    auto evaluator = [m0, m1, w1, scale, k](const SymbolicPoint& x) {
        double g = 0.0;
        for (int n = -k; n <= k; ++n)
            if (x.coordinate(n) == 1) g += std::pow(2.0, -std::abs(n)) * w1;
        Matrix rot = rotation2(scale * g);
        return Matrix(rot * (x.coordinate(0) == 0 ? m0 : m1));
    };

    LongRangeSpec spec;
    spec.evaluator = evaluator;
    // The rotation factor is orthogonal, so norms come from the M's alone.
    spec.sup_norm = std::max(spectral_norm(m0), spectral_norm(m1));
    spec.sup_inv_norm = std::max(1.0 / smallest_singular_value(m0),
                                 1.0 / smallest_singular_value(m1));
    // Two points at distance 2^-N have |g(x) - g(y)| <= 4 w1 2^{-N}, and
    // ||exp(a J) - exp(b J)|| <= |a - b|; with differing center symbols the
    // triangle inequality gives 2 sup_norm at distance 1.
    spec.holder_constant = std::max(2.0 * spec.sup_norm, 4.0 * w1 * scale * spec.sup_norm);
    return Cocycle::long_range(2, ScalarField::complex, std::move(spec), 1.0);
}

Cocycle standard_test_cocycle() {
    Matrix a0(2, 2), a1(2, 2);
    a0 << 1.2, 0, 0, 0.9;
    Matrix d1(2, 2);
    d1 << 1.1, 0, 0, 1.0;
    a1 = rotation2(0.3) * d1;
    WindowTable t;
    t.radius = 0;
    t.entries[{0}] = a0;
    t.entries[{1}] = a1;
    return Cocycle::finite_window(2, ScalarField::complex, std::move(t));
}

}  // namespace cocycle_lab
