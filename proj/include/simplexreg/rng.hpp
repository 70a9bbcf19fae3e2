#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace simplexreg {

/// Seeded random source built on std::mt19937_64, whose raw output sequence is
/// fixed by the C++ standard. The std distributions are implementation
/// defined, so floating-point draws are derived from raw words here:
///   uniform()  = (word >> 11) * 2^-53           in [0, 1)
///   normal()   = Box-Muller on two uniforms      (cached pair)
///   below(n)   = rejection sampling  in [0, n)
/// Identical seed and stream give identical draws on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

    std::uint64_t next_u64() { return engine_(); }
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    std::uint64_t below(std::uint64_t n);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
    std::uint64_t stream_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Independent named streams derived from one run seed.
namespace streams {
inline constexpr std::uint64_t init = 0;
inline constexpr std::uint64_t shuffle = 1;
inline constexpr std::uint64_t dropout = 2;
inline constexpr std::uint64_t data = 3;
}  // namespace streams

}  // namespace simplexreg
