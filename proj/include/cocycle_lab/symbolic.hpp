#pragma once

#include <optional>

#include "cocycle_lab/common.hpp"

namespace cocycle_lab {

/// Eventually bi-periodic element of a two-sided shift space.
///
/// The point repeats `left_tail` toward -infinity up to coordinate
/// core_start-1, carries `core` on [core_start, core_start+|core|), and
/// repeats `right_tail` from core_start+|core| on.  Instances are kept in a
/// canonical form (tails primitive, core fully trimmed, periodic points
/// anchored at 0), so that operator== is exact coordinate-wise equality.
class SymbolicPoint {
public:
    SymbolicPoint(int alphabet_size, Word left_tail, Word core, Word right_tail,
                  long core_start = 0);

    /// Bi-infinite repetition of `word` anchored at coordinate 0.
    static SymbolicPoint periodic(int alphabet_size, const Word& word);

    int alphabet_size() const { return alphabet_size_; }
    int coordinate(long n) const;
    Word window(long lo, long hi) const;  // coordinates lo..hi inclusive

    /// y with y.coordinate(n) == coordinate(n + j) for all n.
    SymbolicPoint shifted(long j) const;

    bool is_periodic() const;
    /// Primitive period; throws unless is_periodic().
    long period() const;

    const Word& left_tail() const { return left_; }
    const Word& core() const { return core_; }
    const Word& right_tail() const { return right_; }
    long core_start() const { return core_start_; }
    long core_end() const { return core_start_ + static_cast<long>(core_.size()); }

    bool operator==(const SymbolicPoint& o) const;
    bool operator!=(const SymbolicPoint& o) const { return !(*this == o); }
    bool operator<(const SymbolicPoint& o) const;  // arbitrary total order on canonical forms

private:
    void canonicalize();

    int alphabet_size_;
    Word left_, core_, right_;
    long core_start_;
};

/// True if x.coordinate(n) == y.coordinate(n) for all n < 0 (exact check).
bool agree_on_left(const SymbolicPoint& x, const SymbolicPoint& y);
/// True if x.coordinate(n) == y.coordinate(n) for all n >= 0 (exact check).
bool agree_on_right(const SymbolicPoint& x, const SymbolicPoint& y);

/// Largest N >= 0 such that x and y agree on all coordinates -N <= i < N;
/// returns std::nullopt when x == y (agreement is unbounded).
std::optional<long> agreement_radius(const SymbolicPoint& x, const SymbolicPoint& y);

/// Full shift or subshift of finite type with a fixed contraction rate.
/// Full shifts carry no transition matrix, so alphabets can be large
/// (induced systems enumerate hundreds of thousands of return words).
struct ShiftSystem {
    int alphabet_size = 1;
    bool full = true;
    Eigen::Matrix<int, -1, -1> transitions;  // 0/1 when !full; empty otherwise
    double theta = 0.5;

    static ShiftSystem full_shift(int alphabet_size, double theta = 0.5);
    static ShiftSystem subshift(Eigen::Matrix<int, -1, -1> transitions, double theta = 0.5);

    bool allows(int a, int b) const { return full || transitions(a, b) != 0; }
    bool word_admissible(const Word& w, bool wrap = false) const;
    bool point_admissible(const SymbolicPoint& x) const;
    void validate() const;  // every symbol has in/out degree >= 1, theta in (0,1)
};

/// theta^N with N = agreement_radius(x, y); 0 when x == y.
double distance(const SymbolicPoint& x, const SymbolicPoint& y, double theta);

/// Periodic point from a word; reduces to the primitive period.  Rejects
/// words not admissible under the system (including the wrap-around step).
SymbolicPoint make_periodic(const Word& word, const ShiftSystem& system);

/// Periodic point p, homoclinic point q and transition length m:
/// q agrees with p strictly in the past, f^m(q) agrees with p from time 0 on.
struct HomoclinicData {
    SymbolicPoint p;
    SymbolicPoint q;
    long m;
};

/// q = (tail of p | connector | tail of p), m = |connector|.  The connector
/// length must be a positive multiple of per(p); rejects connectors equal to
/// the periodic pattern (q would equal p) and inadmissible junctions.
HomoclinicData make_homoclinic(const SymbolicPoint& p, const Word& connector,
                               const ShiftSystem& system);

/// Least depth D >= 0 such that the cylinder {z : z agrees with center on
/// [-D, D]} contains no point of `avoid`.  Rejects avoid lists containing
/// center itself.
long isolating_depth(const SymbolicPoint& center, const std::vector<SymbolicPoint>& avoid);

/// First-return word to a base cylinder, written as the first r symbols of
/// its itinerary (the trailing repeat of the base word is implicit).
struct ReturnWord {
    Word symbols;     // length == return_time, starts with the base word prefix
    long return_time;
};

/// First-return structure on a base cylinder: the return words with time
/// r <= max_return_time enumerated in (r, word)-lexicographic order.  The
/// induced dynamics is a full shift on this alphabet.
struct InducedSystem {
    ShiftSystem base;
    Word base_cylinder;
    long max_return_time = 0;
    std::vector<ReturnWord> words;

    /// Full itinerary word of words[l]: symbols followed by base_cylinder.
    Word full_cylinder_word(std::size_t l) const;
};

InducedSystem induce(const ShiftSystem& system, const Word& base_cylinder, long max_return_time,
                     std::size_t enumeration_cap = 8'000'000);

}  // namespace cocycle_lab
