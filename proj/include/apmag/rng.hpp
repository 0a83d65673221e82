#pragma once
/*
================================================================================
 rng.hpp — deterministic random numbers for reproducible simulations
--------------------------------------------------------------------------------
 Reproducibility contract: a scenario run with a fixed seed must produce
 bit-identical traces. std::normal_distribution is implementation-defined
 (different standard libraries draw different variates from the same engine),
 so Gaussians are generated here with an explicit Box-Muller transform on top
 of std::mt19937_64.

 Independent streams (per trial, per channel) are derived from one master seed
 with splitmix64, which is the recommended seeding scheme for mt19937-family
 engines and guarantees well-separated stream seeds even for consecutive
 trial indices.
================================================================================
*/
#include <cmath>
#include <cstdint>
#include <random>

namespace apmag {

/// splitmix64 step: maps any 64-bit value to a well-mixed 64-bit value.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive a substream seed from a master seed and a stream index.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(master ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Deterministic standard-normal generator (Box-Muller, trigonometric form).
class GaussianRng {
  public:
    explicit GaussianRng(std::uint64_t seed) : eng_(seed) {}

    /// One N(0,1) variate.
    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0,1] so log(u1) is finite; u2 in [0,1).
        const double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Uniform in [0,1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace apmag
