#include "epsim/rng.hpp"

#include <cmath>

namespace epsim {

std::uint64_t Rng::uniform_below(std::uint64_t n) {
    if (n == 0) return 0;
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

std::uint64_t Rng::poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 60.0) {
        // Inversion by multiplication (Knuth). exp(-60) is still well above
        // the double underflow limit.
        const double limit = std::exp(-mean);
        std::uint64_t k = 0;
        double prod = uniform();
        while (prod > limit) {
            ++k;
            prod *= uniform();
        }
        return k;
    }
    // Gaussian approximation with continuity correction. At mean >= 60 the
    // relative skew error is far below the statistical resolution of any
    // test in this project.
    const double x = mean + std::sqrt(mean) * gauss() + 0.5;
    if (x < 0.0) return 0;
    return static_cast<std::uint64_t>(x);
}

double Rng::gauss() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

std::size_t Rng::categorical(const double* cumulative, std::size_t n) {
    const double u = uniform();
    for (std::size_t i = 0; i < n; ++i) {
        if (u < cumulative[i]) return i;
    }
    return n;
}

}  // namespace epsim
