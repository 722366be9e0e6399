#include "cocycle_lab/common.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

namespace cocycle_lab {

std::string word_to_string(const Word& w) {
    bool compact = true;
    for (int s : w)
        if (s < 0 || s > 9) compact = false;
    std::ostringstream out;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (compact) {
            out << w[i];
        } else {
            if (i) out << ',';
            out << w[i];
        }
    }
    return out.str();
}

Word word_from_string(const std::string& s) {
    Word w;
    if (s.find(',') != std::string::npos) {
        std::istringstream in(s);
        std::string tok;
        while (std::getline(in, tok, ','))
            w.push_back(std::stoi(tok));
        return w;
    }
    for (char c : s) {
        if (c < '0' || c > '9') throw Error("bad word symbol '" + std::string(1, c) + "'");
        w.push_back(c - '0');
    }
    return w;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    // splitmix64 step on master ^ golden-ratio multiple of the stream index
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
}

int Rng::categorical(const std::vector<double>& cumulative) {
    double u = uniform();
    std::size_t lo = 0, hi = cumulative.size();
    while (lo + 1 < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (u < cumulative[mid - 1])
            hi = mid;
        else
            lo = mid;
    }
    return static_cast<int>(lo);
}

int thread_cap() {
    static int cap = [] {
        const char* v = std::getenv("COCYCLE_LAB_THREADS");
        if (!v) return 0;
        int n = std::atoi(v);
        return n > 0 ? n : 0;
    }();
    return cap;
}

}  // namespace cocycle_lab
