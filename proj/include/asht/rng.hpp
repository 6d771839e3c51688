#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace asht {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based SplitMix64 stream: the k-th output (k = 0, 1, ...) is
// mix64(seed + k * 0x9e3779b97f4a7c15). Seed 0 yields
// 0xe220a8397b1dcdaf, 0x6e789e6aa1b965f4, 0x06c45d188009454f.
class Rng {
public:
    using result_type = std::uint64_t;
    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        std::uint64_t out = mix64(state_);
        state_ += 0x9e3779b97f4a7c15ULL;
        return out;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform on [0, n).
    std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * n); }

    // Uniform point on the (n-1)-simplex, i.e. Dirichlet(1, ..., 1).
    std::vector<double> dirichlet_ones(int n) {
        std::vector<double> w(n);
        double s = 0.0;
        for (auto& v : w) {
            v = -std::log1p(-uniform());
            s += v;
        }
        for (auto& v : w) v /= s;
        return w;
    }

    // Inverse-CDF draw from a probability vector.
    int categorical(const double* p, int n) {
        double u = uniform(), c = 0.0;
        for (int x = 0; x + 1 < n; ++x) {
            c += p[x];
            if (u < c) return x;
        }
        return n - 1;
    }

private:
    std::uint64_t state_;
};

// Per-trial stream derived from a master seed.
inline Rng trial_rng(std::uint64_t seed, std::uint64_t trial) { return Rng(mix64(seed ^ trial)); }

}  // namespace asht
