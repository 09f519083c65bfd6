#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>

namespace ddsra {

// splitmix64 finalizer; used to derive independent substreams from one seed so
// that experiment traces do not depend on evaluation order.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// mt19937_64 with explicit variate transforms. The standard pins down the
// engine bit-for-bit but not the distributions, and traces must be
// reproducible byte-for-byte across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    double uniform01() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double exponential_unit_mean() {
        // -log1p(-u) maps u in [0,1) to (0, inf) without hitting log(0)
        return -std::log1p(-uniform01());
    }

    double gaussian() {
        // Marsaglia polar method; rejection loop is deterministic per stream.
        for (;;) {
            const double x = 2.0 * uniform01() - 1.0;
            const double y = 2.0 * uniform01() - 1.0;
            const double s = x * x + y * y;
            if (s > 0.0 && s < 1.0) {
                return x * std::sqrt(-2.0 * std::log(s) / s);
            }
        }
    }

private:
    std::mt19937_64 eng_;
};

// shortest text form that round-trips a double; used everywhere a trace or
// summary is serialized so that identical runs write identical bytes
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline constexpr double kInfinity = 1.0e300;

// relative slack for feasibility comparisons at constraint boundaries
inline bool leq_with_slack(double lhs, double rhs, double rel = 1e-9) {
    return lhs <= rhs + rel * (std::abs(rhs) + 1.0);
}

}  // namespace ddsra
