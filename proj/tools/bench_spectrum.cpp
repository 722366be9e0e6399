// Timing comparison between the serial reference and the OpenMP spectrum
// kernel, plus the rank probe in both modes.  Both paths must agree
// bit-for-bit; this binary reports the speedup actually obtained.

#include <chrono>
#include <iostream>

#include "cocycle_lab/perturbation.hpp"
#include "cocycle_lab/spectrum.hpp"

using namespace cocycle_lab;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Cocycle d3_cocycle() {
    Matrix a0 = Matrix::Zero(3, 3), a1 = Matrix::Zero(3, 3);
    a0.diagonal() << 1.4, 1.0, 0.65;
    a1 << 0.9, 0.3, 0.0, -0.3, 0.9, 0.2, 0.0, -0.2, 1.05;
    WindowTable t;
    t.radius = 0;
    t.entries[{0}] = a0;
    t.entries[{1}] = a1;
    return Cocycle::finite_window(3, ScalarField::complex, std::move(t));
}

}  // namespace

int main(int argc, char** argv) {
    long n_iter = argc > 1 ? std::atol(argv[1]) : 200000;
    int n_samples = argc > 2 ? std::atoi(argv[2]) : 16;

    ShiftSystem full = ShiftSystem::full_shift(2);
    MeasureSpec half = MeasureSpec::bernoulli({0.5, 0.5});

    std::cout << "spectrum benchmark: n_iter=" << n_iter << " n_samples=" << n_samples << "\n";
    for (auto [name, cocycle] : {std::pair<const char*, Cocycle>{"d=2 standard", standard_test_cocycle()},
                                 std::pair<const char*, Cocycle>{"d=3 mixing", d3_cocycle()}}) {
        auto t0 = Clock::now();
        SpectrumEstimate serial =
            estimate_spectrum(cocycle, full, half, n_iter, n_samples, 7, Execution::serial);
        double ts = seconds_since(t0);
        t0 = Clock::now();
        SpectrumEstimate parallel =
            estimate_spectrum(cocycle, full, half, n_iter, n_samples, 7, Execution::parallel);
        double tp = seconds_since(t0);
        bool identical = serial.per_sample == parallel.per_sample;
        std::cout << "  " << name << ": serial " << ts << " s, parallel " << tp << " s, speedup "
                  << ts / tp << "x, bit-identical " << (identical ? "yes" : "NO") << "\n";
        if (!identical) return 1;
    }

    Cocycle a = standard_test_cocycle();
    BunchingCertificate cert = certify_bunching(a, full);
    std::vector<HomoclinicData> sites = {
        make_homoclinic(make_periodic({0}, full), {1}, full),
        make_homoclinic(make_periodic({1}, full), {0}, full),
    };
    auto t0 = Clock::now();
    RankProbeReport serial = submersion_rank_probe(a, full, cert, sites, 32, 1e-5, 7, false);
    double ts = seconds_since(t0);
    t0 = Clock::now();
    RankProbeReport parallel = submersion_rank_probe(a, full, cert, sites, 32, 1e-5, 7, true);
    double tp = seconds_since(t0);
    bool identical = serial.singular_values == parallel.singular_values;
    std::cout << "rank probe (l=2, 32 directions): serial " << ts << " s, parallel " << tp
              << " s, speedup " << ts / tp << "x, bit-identical " << (identical ? "yes" : "NO")
              << "\n";
    return identical ? 0 : 1;
}
