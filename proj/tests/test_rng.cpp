#include "epsim/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace epsim;

TEST_CASE("rng streams are deterministic and key-separated") {
    Rng a(stream_key(42, 1, 2, 3));
    Rng b(stream_key(42, 1, 2, 3));
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng c(stream_key(42, 1, 2, 4));
    CHECK(Rng(stream_key(42, 1, 2, 3)).next_u64() != c.next_u64());
}

TEST_CASE("uniform_below has no obvious bias") {
    Rng r(stream_key(7, 0));
    int histogram[10] = {};
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++histogram[r.uniform_below(10)];
    for (int h : histogram) {
        // 5 sigma band around n/10
        CHECK(h > n / 10 - 5 * std::sqrt(n / 10.0));
        CHECK(h < n / 10 + 5 * std::sqrt(n / 10.0));
    }
}

TEST_CASE("poisson sampler matches mean and variance") {
    for (const double mean : {0.5, 5.0, 40.0, 500.0, 50000.0}) {
        Rng r(stream_key(11, static_cast<std::uint64_t>(mean * 100)));
        const int n = mean < 100 ? 200000 : 20000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double k = static_cast<double>(r.poisson(mean));
            sum += k;
            sum2 += k * k;
        }
        const double m = sum / n;
        const double v = sum2 / n - m * m;
        const double mean_err = 5.0 * std::sqrt(mean / n);
        CHECK(std::abs(m - mean) < mean_err);
        // variance of the sample variance ~ sqrt(2/n) * var for near-normal counts
        CHECK(std::abs(v - mean) < 6.0 * mean * std::sqrt(2.0 / n) + 0.05 * std::sqrt(mean));
    }
}

TEST_CASE("gauss has unit variance") {
    Rng r(stream_key(13, 0));
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = r.gauss();
        sum += g;
        sum2 += g * g;
    }
    CHECK(std::abs(sum / n) < 5.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(sum2 / n - 1.0) < 0.02);
}
