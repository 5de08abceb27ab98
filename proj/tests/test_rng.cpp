#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "ecav/rng.hpp"

using namespace ecav;

TEST_CASE("derive_seed is deterministic and spreads indices") {
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));

    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 4096; ++i) seen.insert(derive_seed(42, i));
    CHECK(seen.size() == 4096);  // no collisions across trajectory indices
}

TEST_CASE("identical seeds give identical streams") {
    Rng a(derive_seed(7, 3));
    Rng b(derive_seed(7, 3));
    for (int i = 0; i < 1000; ++i) CHECK(a.uniform() == b.uniform());
    for (int i = 0; i < 1000; ++i) CHECK(a.normal() == b.normal());
}

TEST_CASE("uniform() lands in [0,1) with the right first moments") {
    Rng rng(123);
    const long n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (long i = 0; i < n; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sum_sq += u * u;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    // mean 1/2 (se = sqrt(1/12n)), variance 1/12
    CHECK(std::abs(mean - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.02));
}

TEST_CASE("normal() has zero mean, unit variance, light tails") {
    Rng rng(99);
    const long n = 200000;
    double sum = 0.0, sum_sq = 0.0, sum_4 = 0.0;
    for (long i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sum_sq += z * z;
        sum_4 += z * z * z * z;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    const double kurt = sum_4 / n / (var * var);
    CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    // se(var) ~ sqrt(2/n), se(kurtosis) ~ sqrt(24/n)
    CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(kurt - 3.0) < 4.0 * std::sqrt(24.0 / n));
}

TEST_CASE("different streams decorrelate") {
    Rng a(derive_seed(5, 0));
    Rng b(derive_seed(5, 1));
    const long n = 100000;
    double cross = 0.0;
    for (long i = 0; i < n; ++i) cross += (a.uniform() - 0.5) * (b.uniform() - 0.5);
    cross /= n;
    // correlation of independent uniforms: se = (1/12)/sqrt(n)
    CHECK(std::abs(cross) < 4.0 / 12.0 / std::sqrt(static_cast<double>(n)));
}
