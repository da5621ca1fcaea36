#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "sgdlab/rng.hpp"

using namespace sgdlab;

TEST_CASE("philox known answer vectors") {
    PhiloxBlock z{{0u, 0u, 0u, 0u}};
    PhiloxBlock r = philox4x32(z, 0u, 0u);
    CHECK(r.v[0] == 0x6627e8d5u);
    CHECK(r.v[1] == 0xe169c58du);
    CHECK(r.v[2] == 0xbc57ac4cu);
    CHECK(r.v[3] == 0x9b00dbd8u);

    PhiloxBlock ones{{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}};
    r = philox4x32(ones, 0xffffffffu, 0xffffffffu);
    CHECK(r.v[0] == 0x408f276du);
    CHECK(r.v[1] == 0x41c83b0eu);
    CHECK(r.v[2] == 0xa20bc7c6u);
    CHECK(r.v[3] == 0x6d5451fdu);

    PhiloxBlock pi{{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}};
    r = philox4x32(pi, 0xa4093822u, 0x299f31d0u);
    CHECK(r.v[0] == 0xd16cfe09u);
    CHECK(r.v[1] == 0x94fdccebu);
    CHECK(r.v[2] == 0x5001e420u);
    CHECK(r.v[3] == 0x24126ea1u);
}

TEST_CASE("streams are reproducible and addressed by (seed, index)") {
    Stream a(1, 2), b(1, 2), c(1, 3), d(2, 2);
    double first = a.uniform();
    CHECK(first == b.uniform());
    CHECK(first == 0.90313749377394625);  // pinned: artifact byte-identity rests on this
    CHECK(first != c.uniform());
    CHECK(first != d.uniform());
    for (int i = 0; i < 1000; ++i) CHECK(a.uniform() == b.uniform());
}

TEST_CASE("uniform lies strictly inside (0,1) with the right moments") {
    Stream s(7, 0);
    double sum = 0.0, sumsq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double u = s.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    // SE(mean) ~ 1/sqrt(12 n) ~ 6.5e-4
    CHECK(std::abs(mean - 0.5) < 4.0 * 6.5e-4);
    CHECK(std::abs(var - 1.0 / 12.0) < 4.0 * 1e-3);
}

TEST_CASE("normal moments and pair caching") {
    Stream s(11, 4);
    double sum = 0.0, sumsq = 0.0, sum4 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double z = s.normal();
        sum += z;
        sumsq += z * z;
        sum4 += z * z * z * z;
    }
    CHECK(std::abs(sum / n) < 4.0 * std::sqrt(1.0 / n));
    CHECK(std::abs(sumsq / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(sum4 / n - 3.0) < 4.0 * std::sqrt(96.0 / n));
}

TEST_CASE("rademacher is +-1 with equal probability") {
    Stream s(3, 9);
    int plus = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double v = s.rademacher();
        REQUIRE((v == 1.0 || v == -1.0));
        plus += v > 0.0 ? 1 : 0;
    }
    CHECK(std::abs(plus - n / 2) < 4.0 * std::sqrt(0.25 * n));
}

TEST_CASE("block counter advances one block per four lanes") {
    Stream s(5, 5);
    CHECK(s.counter() == 0);
    s.uniform();  // two lanes
    CHECK(s.counter() == 1);
    s.uniform();  // four lanes total
    CHECK(s.counter() == 1);
    s.uniform();
    CHECK(s.counter() == 2);
}
