#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cocycle_lab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Finite word over an alphabet {0, ..., k-1}.
using Word = std::vector<int>;

enum class ScalarField { real, complex };

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string word_to_string(const Word& w);
Word word_from_string(const std::string& s);

/// Deterministic 64-bit mix used to derive independent substream seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// All stochastic choices in the library flow through this class so that a
/// fixed seed reproduces results bit-identically.  Draws use only the
/// standard-pinned mt19937_64 output, never implementation-defined
/// distribution objects.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);
    /// Standard normal (Box-Muller).
    double normal();
    /// Smallest i with u < cumulative[i]; cumulative must be nondecreasing
    /// with back() == 1 (within rounding).
    int categorical(const std::vector<double>& cumulative);
    std::uint64_t bits() { return gen_(); }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Thread cap from COCYCLE_LAB_THREADS (0 = no cap). Read once per process.
int thread_cap();

}  // namespace cocycle_lab
