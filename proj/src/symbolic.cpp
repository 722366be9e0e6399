#include "cocycle_lab/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace cocycle_lab {

namespace {

long positive_mod(long n, long m) {
    long r = n % m;
    return r < 0 ? r + m : r;
}

/// Smallest p dividing |w| with w[i] == w[i mod p] for all i.
Word primitive_word(const Word& w) {
    const long n = static_cast<long>(w.size());
    for (long p = 1; p <= n; ++p) {
        if (n % p) continue;
        bool ok = true;
        for (long i = p; i < n && ok; ++i)
            if (w[i] != w[i % p]) ok = false;
        if (ok) return Word(w.begin(), w.begin() + p);
    }
    return w;  // unreachable
}

Word rotate_left(Word w) {
    std::rotate(w.begin(), w.begin() + 1, w.end());
    return w;
}

Word rotate_right(Word w) {
    std::rotate(w.begin(), w.end() - 1, w.end());
    return w;
}

long lcm_long(long a, long b) { return a / std::gcd(a, b) * b; }

}  // namespace

SymbolicPoint::SymbolicPoint(int alphabet_size, Word left_tail, Word core, Word right_tail,
                             long core_start)
    : alphabet_size_(alphabet_size),
      left_(std::move(left_tail)),
      core_(std::move(core)),
      right_(std::move(right_tail)),
      core_start_(core_start) {
    if (alphabet_size_ < 1) throw Error("alphabet_size must be positive");
    if (left_.empty() || right_.empty()) throw Error("tails must be nonempty");
    auto check = [&](const Word& w) {
        for (int s : w)
            if (s < 0 || s >= alphabet_size_)
                throw Error("symbol out of range: " + std::to_string(s));
    };
    check(left_);
    check(core_);
    check(right_);
    canonicalize();
}

SymbolicPoint SymbolicPoint::periodic(int alphabet_size, const Word& word) {
    if (word.empty()) throw Error("periodic word must be nonempty");
    return SymbolicPoint(alphabet_size, word, {}, word, 0);
}

void SymbolicPoint::canonicalize() {
    // Tails to primitive period.  Alignment: left_ ends at core_start_-1,
    // right_ begins at core_end; the primitive window keeping that alignment
    // is the last (resp. first) p symbols.
    {
        Word lp = primitive_word(left_);
        if (lp.size() < left_.size())
            left_ = Word(left_.end() - static_cast<long>(lp.size()), left_.end());
        Word rp = primitive_word(right_);
        if (rp.size() < right_.size()) right_.resize(rp.size());
    }

    // Absorb core symbols that match the periodic extension of a tail.
    while (!core_.empty() && core_.back() == right_.back()) {
        core_.pop_back();
        right_ = rotate_right(right_);
    }
    while (!core_.empty() && core_.front() == left_.front()) {
        core_.erase(core_.begin());
        left_ = rotate_left(left_);
        ++core_start_;
    }

    if (!core_.empty()) return;

    // Empty core: boundary between the two periodic regimes.
    if (left_ == right_) {
        // Fully periodic; re-anchor the word at coordinate 0.
        const long p = static_cast<long>(right_.size());
        Word w(p);
        for (long k = 0; k < p; ++k) w[k] = right_[positive_mod(k - core_start_, p)];
        left_ = right_ = w;
        core_start_ = 0;
        return;
    }
    // Push the boundary down to the minimal onset of right-periodicity.
    const long cap = lcm_long(static_cast<long>(left_.size()), static_cast<long>(right_.size()));
    long moved = 0;
    while (left_.back() == right_.back()) {
        left_ = rotate_right(left_);
        right_ = rotate_right(right_);
        --core_start_;
        if (left_ == right_) {
            const long p = static_cast<long>(right_.size());
            Word w(p);
            for (long k = 0; k < p; ++k) w[k] = right_[positive_mod(k - core_start_, p)];
            left_ = right_ = w;
            core_start_ = 0;
            return;
        }
        if (++moved > cap) throw Error("canonicalize: boundary loop did not terminate");
    }
}

int SymbolicPoint::coordinate(long n) const {
    if (n < core_start_)
        return left_[positive_mod(n - core_start_, static_cast<long>(left_.size()))];
    const long e = core_end();
    if (n < e) return core_[n - core_start_];
    return right_[positive_mod(n - e, static_cast<long>(right_.size()))];
}

Word SymbolicPoint::window(long lo, long hi) const {
    if (hi < lo) return {};
    Word w;
    w.reserve(hi - lo + 1);
    for (long n = lo; n <= hi; ++n) w.push_back(coordinate(n));
    return w;
}

SymbolicPoint SymbolicPoint::shifted(long j) const {
    return SymbolicPoint(alphabet_size_, left_, core_, right_, core_start_ - j);
}

bool SymbolicPoint::is_periodic() const {
    return core_.empty() && core_start_ == 0 && left_ == right_;
}

long SymbolicPoint::period() const {
    if (!is_periodic()) throw Error("period() on a non-periodic point");
    return static_cast<long>(right_.size());
}

bool SymbolicPoint::operator==(const SymbolicPoint& o) const {
    return alphabet_size_ == o.alphabet_size_ && core_start_ == o.core_start_ &&
           left_ == o.left_ && core_ == o.core_ && right_ == o.right_;
}

bool SymbolicPoint::operator<(const SymbolicPoint& o) const {
    auto key = [](const SymbolicPoint& x) {
        return std::tie(x.alphabet_size_, x.core_start_, x.left_, x.core_, x.right_);
    };
    return key(*this) < key(o);
}

namespace {

/// Agreement of two eventually periodic sequences over n >= 0, checked on a
/// window long enough that tail periodicity decides the rest.
bool agree_from(const SymbolicPoint& x, const SymbolicPoint& y, long from) {
    const long bulk = std::max({x.core_end(), y.core_end(), from});
    const long l = lcm_long(static_cast<long>(x.right_tail().size()),
                            static_cast<long>(y.right_tail().size()));
    for (long n = from; n < bulk + l; ++n)
        if (x.coordinate(n) != y.coordinate(n)) return false;
    return true;
}

bool agree_until(const SymbolicPoint& x, const SymbolicPoint& y, long until) {
    const long bulk = std::min({x.core_start(), y.core_start(), until});
    const long l = lcm_long(static_cast<long>(x.left_tail().size()),
                            static_cast<long>(y.left_tail().size()));
    for (long n = bulk - l; n < until; ++n)
        if (x.coordinate(n) != y.coordinate(n)) return false;
    return true;
}

}  // namespace

bool agree_on_right(const SymbolicPoint& x, const SymbolicPoint& y) {
    return agree_from(x, y, 0);
}

bool agree_on_left(const SymbolicPoint& x, const SymbolicPoint& y) {
    return agree_until(x, y, 0);
}

std::optional<long> agreement_radius(const SymbolicPoint& x, const SymbolicPoint& y) {
    if (x.alphabet_size() != y.alphabet_size()) throw Error("alphabet mismatch");
    if (x == y) return std::nullopt;
    // Distinct canonical points must disagree inside a window bounded by
    // both representations plus one tail period on each side.
    const long cap = std::max({std::abs(x.core_start()), std::abs(x.core_end()),
                               std::abs(y.core_start()), std::abs(y.core_end())}) +
                     lcm_long(static_cast<long>(x.left_tail().size()),
                              static_cast<long>(y.left_tail().size())) +
                     lcm_long(static_cast<long>(x.right_tail().size()),
                              static_cast<long>(y.right_tail().size())) +
                     2;
    for (long n = 0; n <= cap; ++n) {
        if (x.coordinate(n) != y.coordinate(n) || x.coordinate(-n - 1) != y.coordinate(-n - 1))
            return n;
    }
    throw Error("agreement_radius: distinct canonical points never disagreed");
}

double distance(const SymbolicPoint& x, const SymbolicPoint& y, double theta) {
    auto n = agreement_radius(x, y);
    if (!n) return 0.0;
    return std::pow(theta, static_cast<double>(*n));
}

ShiftSystem ShiftSystem::full_shift(int alphabet_size, double theta) {
    ShiftSystem s;
    s.alphabet_size = alphabet_size;
    s.full = true;
    s.theta = theta;
    s.validate();
    return s;
}

ShiftSystem ShiftSystem::subshift(Eigen::Matrix<int, -1, -1> transitions, double theta) {
    ShiftSystem s;
    s.alphabet_size = static_cast<int>(transitions.rows());
    s.full = false;
    s.transitions = std::move(transitions);
    s.theta = theta;
    // A subshift whose matrix is all ones is just the full shift.
    if (s.transitions.minCoeff() == 1) {
        s.full = true;
        s.transitions.resize(0, 0);
    }
    s.validate();
    return s;
}

void ShiftSystem::validate() const {
    if (alphabet_size < 1) throw Error("alphabet_size must be positive");
    if (!(theta > 0.0 && theta < 1.0)) throw Error("theta must lie in (0,1)");
    if (full) return;
    if (transitions.rows() != alphabet_size || transitions.cols() != alphabet_size)
        throw Error("transition matrix shape mismatch");
    for (int a = 0; a < alphabet_size; ++a) {
        if (transitions.row(a).sum() == 0)
            throw Error("symbol " + std::to_string(a) + " has no outgoing transition");
        if (transitions.col(a).sum() == 0)
            throw Error("symbol " + std::to_string(a) + " has no incoming transition");
    }
}

bool ShiftSystem::word_admissible(const Word& w, bool wrap) const {
    for (std::size_t i = 0; i + 1 < w.size(); ++i)
        if (!allows(w[i], w[i + 1])) return false;
    if (wrap && !w.empty() && !allows(w.back(), w.front())) return false;
    return true;
}

bool ShiftSystem::point_admissible(const SymbolicPoint& x) const {
    if (x.alphabet_size() != alphabet_size) return false;
    const long lo = x.core_start() - static_cast<long>(x.left_tail().size()) - 1;
    const long hi = x.core_end() + static_cast<long>(x.right_tail().size()) + 1;
    for (long n = lo; n < hi; ++n)
        if (!allows(x.coordinate(n), x.coordinate(n + 1))) return false;
    return true;
}

SymbolicPoint make_periodic(const Word& word, const ShiftSystem& system) {
    if (word.empty()) throw Error("make_periodic: empty word");
    for (std::size_t i = 0; i < word.size(); ++i) {
        const int a = word[i];
        const int b = word[(i + 1) % word.size()];
        if (a < 0 || a >= system.alphabet_size)
            throw Error("make_periodic: symbol out of range: " + std::to_string(a));
        if (!system.allows(a, b))
            throw Error("make_periodic: transition " + std::to_string(a) + "->" +
                        std::to_string(b) + " not allowed");
    }
    return SymbolicPoint::periodic(system.alphabet_size, word);
}

HomoclinicData make_homoclinic(const SymbolicPoint& p, const Word& connector,
                               const ShiftSystem& system) {
    if (!p.is_periodic()) throw Error("make_homoclinic: p must be periodic");
    if (!system.point_admissible(p)) throw Error("make_homoclinic: p not admissible");
    const long per = p.period();
    const long m = static_cast<long>(connector.size());
    if (m == 0 || m % per != 0)
        throw Error("make_homoclinic: connector length must be a positive multiple of per(p)");

    const Word& w = p.right_tail();
    SymbolicPoint q(p.alphabet_size(), w, connector, w, 0);
    if (q == p) throw Error("make_homoclinic: connector equals the periodic pattern");
    if (!system.point_admissible(q)) throw Error("make_homoclinic: junction not admissible");
    return HomoclinicData{p, q, m};
}

long isolating_depth(const SymbolicPoint& center, const std::vector<SymbolicPoint>& avoid) {
    long depth = 0;
    for (const auto& z : avoid) {
        if (z == center) throw Error("isolating_depth: avoid list contains the center");
        // Smallest |i| with a disagreement; the cylinder of that depth
        // already excludes z.
        long i = 0;
        for (;;) {
            if (center.coordinate(i) != z.coordinate(i) ||
                center.coordinate(-i) != z.coordinate(-i))
                break;
            ++i;
        }
        depth = std::max(depth, i);
    }
    return depth;
}

Word InducedSystem::full_cylinder_word(std::size_t l) const {
    Word w = words[l].symbols;
    w.insert(w.end(), base_cylinder.begin(), base_cylinder.end());
    return w;
}

InducedSystem induce(const ShiftSystem& system, const Word& base_cylinder, long max_return_time,
                     std::size_t enumeration_cap) {
    if (base_cylinder.empty()) throw Error("induce: empty base cylinder");
    if (!system.word_admissible(base_cylinder))
        throw Error("induce: base cylinder not admissible");
    for (int s : base_cylinder)
        if (s < 0 || s >= system.alphabet_size) throw Error("induce: symbol out of range");
    const long k = static_cast<long>(base_cylinder.size());
    if (max_return_time < k)
        throw Error("induce: max_return_time must be at least the base cylinder length");

    InducedSystem out;
    out.base = system;
    out.base_cylinder = base_cylinder;
    out.max_return_time = max_return_time;

    // Depth-first over itineraries starting with the base word; a branch
    // closes the first time the trailing k symbols spell the base word again
    // (first return), and is abandoned past length max_return_time + k.
    Word w = base_cylinder;
    auto ends_with_base = [&](const Word& v) {
        if (v.size() < base_cylinder.size()) return false;
        return std::equal(base_cylinder.begin(), base_cylinder.end(),
                          v.end() - static_cast<long>(base_cylinder.size()));
    };
    std::vector<ReturnWord> found;

    std::function<void()> dfs = [&]() {
        const long len = static_cast<long>(w.size());
        if (len > k) {
            // Check for a completed return at position len - k (>= 1).
            if (ends_with_base(w)) {
                const long r = len - k;
                if (r >= 1) {
                    if (found.size() >= enumeration_cap)
                        throw Error("induce: enumeration exceeds cap");
                    found.push_back(ReturnWord{Word(w.begin(), w.begin() + r), r});
                }
                return;  // first return: no extension past it
            }
        }
        if (len >= max_return_time + k) return;
        for (int s = 0; s < system.alphabet_size; ++s) {
            if (!system.allows(w.back(), s)) continue;
            w.push_back(s);
            dfs();
            w.pop_back();
        }
    };
    dfs();

    std::sort(found.begin(), found.end(), [](const ReturnWord& a, const ReturnWord& b) {
        if (a.return_time != b.return_time) return a.return_time < b.return_time;
        return a.symbols < b.symbols;
    });
    out.words = std::move(found);
    return out;
}

}  // namespace cocycle_lab
