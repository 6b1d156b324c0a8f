#include <doctest.h>

#include <bit>
#include <cmath>
#include <numeric>

#include "devfp/fpnum.hpp"
#include "devfp/rng.hpp"
#include "support.hpp"

using namespace devfp;

namespace {
const AccumulatorSpec f32{AccWidth::Bits32, false};
const AccumulatorSpec f32fma{AccWidth::Bits32, true};
const AccumulatorSpec f64{AccWidth::Bits64, false};
}  // namespace

TEST_CASE("strategy names round-trip") {
    for (auto s : {ReductionStrategy::sequential(), ReductionStrategy::reversed(), ReductionStrategy::pairwise(),
                   ReductionStrategy::kahan(), ReductionStrategy::blocked(48)})
        CHECK(ReductionStrategy::parse(s.name()) == s);
    CHECK_THROWS_AS(ReductionStrategy::parse("blocked:0"), Error);
    CHECK_THROWS_AS(ReductionStrategy::parse("tree"), Error);
    CHECK(is_redundant(ReductionStrategy::kahan(), f64));
    CHECK_FALSE(is_redundant(ReductionStrategy::kahan(), f32));
}

TEST_CASE("ten thousand tenths: order changes the bits, not the magnitude") {
    std::vector<float> v(10000, 0.1f);
    float seq = reduce(v, ReductionStrategy::sequential(), f32);
    float pw = reduce(v, ReductionStrategy::pairwise(), f32);
    CHECK(std::bit_cast<uint32_t>(seq) != std::bit_cast<uint32_t>(pw));
    double oracle = oracle_sum(v);
    CHECK(std::fabs(oracle - 1000.0) < 1e-4);  // 0.1f is 0.1 + 1.49e-9
    CHECK(std::fabs(seq - oracle) < 1e-1);
    CHECK(std::fabs(pw - oracle) < 1e-1);
    // Kahan in fp32 lands on the correctly rounded sum.
    CHECK(reduce(v, ReductionStrategy::kahan(), f32) == static_cast<float>(oracle));
}

TEST_CASE("small integers sum exactly under every order") {
    std::vector<float> v(1000);
    std::iota(v.begin(), v.end(), 1.0f);
    for (auto s : {ReductionStrategy::sequential(), ReductionStrategy::reversed(), ReductionStrategy::pairwise(),
                   ReductionStrategy::kahan(), ReductionStrategy::blocked(7), ReductionStrategy::blocked(64)})
        CHECK(reduce(v, s, f32) == 500500.0f);
}

TEST_CASE("blocked with tile >= n is sequential") {
    CounterRng r(3);
    std::vector<float> v(100);
    for (auto& x : v) x = static_cast<float>(r.normal());
    CHECK(std::bit_cast<uint32_t>(reduce(v, ReductionStrategy::blocked(128), f32)) ==
          std::bit_cast<uint32_t>(reduce(v, ReductionStrategy::sequential(), f32)));
}

TEST_CASE("sums of random data stay near the compensated oracle") {
    CounterRng r(11);
    std::vector<float> v(4096);
    for (auto& x : v) x = static_cast<float>(r.normal());
    double o = oracle_sum(v);
    double scale = 0.0;
    for (float x : v) scale += std::fabs(x);
    for (auto s : {ReductionStrategy::sequential(), ReductionStrategy::pairwise(), ReductionStrategy::blocked(32),
                   ReductionStrategy::kahan()}) {
        // Worst-case bound for recursive summation in fp32: n * eps * sum|x|.
        CHECK(std::fabs(reduce(v, s, f32) - o) <= 4096 * 0x1p-24 * scale);
    }
    CHECK(std::fabs(reduce(v, ReductionStrategy::sequential(), f64) - o) <= 1e-6 * std::fabs(o) + 1e-6);
}

TEST_CASE("fma rounds the product once") {
    // 1 + 2^-13 squared needs 27 bits; without FMA the 2^-26 tail is lost.
    std::vector<float> a = {1.0f + 0x1p-13f}, b = {1.0f + 0x1p-13f};
    double exact = (1.0 + 0x1p-13) * (1.0 + 0x1p-13);
    CHECK(product_term(a[0], b[0], true) == exact);
    CHECK(product_term(a[0], b[0], false) != exact);
    CHECK(dot(a, b, ReductionStrategy::sequential(), f32fma) == static_cast<float>(exact));
}

TEST_CASE("dot matches the oracle within fp32 error") {
    CounterRng r(5);
    std::vector<float> a(256), b(256);
    for (size_t i = 0; i < a.size(); ++i) a[i] = static_cast<float>(r.normal()), b[i] = static_cast<float>(r.normal());
    double o = oracle_dot(a, b);
    double scale = 0.0;
    for (size_t i = 0; i < a.size(); ++i) scale += std::fabs(static_cast<double>(a[i]) * b[i]);
    CHECK(std::fabs(dot(a, b, ReductionStrategy::pairwise(), f32) - o) <= 256 * 0x1p-24 * scale);
    CHECK_THROWS_AS(dot(a, std::span<const float>(b).first(3), ReductionStrategy::pairwise(), f32), Error);
}

TEST_CASE("matvec: sequential and blocked(8) rows agree closely but not always bitwise") {
    CounterRng r(17);
    Matrix m(64, 200);
    std::vector<float> x(200);
    for (auto& v : m.data) v = static_cast<float>(r.normal());
    for (auto& v : x) v = static_cast<float>(r.normal());
    auto s = matvec(m, x, ReductionStrategy::sequential(), f32);
    auto b = matvec(m, x, ReductionStrategy::blocked(8), f32);
    int differ = 0;
    for (int i = 0; i < m.rows; ++i) {
        differ += s[i] != b[i];
        CHECK(std::fabs(s[i] - b[i]) < 1e-4);
        CHECK(std::fabs(s[i] - oracle_dot(m.row(i), x)) < 1e-4);
    }
    CHECK(differ > 0);
}

TEST_CASE("softmax witness: formulations differ in bits, agree in value") {
    const auto& l = testing::kSoftmaxWitness;
    auto a = softmax(l, SoftmaxVariant::TwoPassMaxSubtract, ReductionStrategy::sequential(), f32);
    auto b = softmax(l, SoftmaxVariant::StreamingOnePass, ReductionStrategy::sequential(), f32);
    int differ = 0;
    double sa = 0, sb = 0;
    for (size_t i = 0; i < l.size(); ++i) {
        differ += std::bit_cast<uint32_t>(a[i]) != std::bit_cast<uint32_t>(b[i]);
        CHECK(std::fabs(a[i] - b[i]) <= 1e-5);
        sa += a[i], sb += b[i];
    }
    CHECK(differ >= 1);
    CHECK(std::fabs(sa - 1.0) <= 1e-6);
    CHECK(std::fabs(sb - 1.0) <= 1e-6);
    // Independent check against a double-precision softmax.
    double m = *std::max_element(l.begin(), l.end()), z = 0.0;
    for (float v : l) z += std::exp(v - m);
    for (size_t i = 0; i < l.size(); ++i) CHECK(std::fabs(a[i] - std::exp(l[i] - m) / z) < 1e-6);
}

TEST_CASE("softmax without max subtraction clamps instead of overflowing") {
    std::vector<float> l = {200.0f, 0.0f, -200.0f};
    auto p = softmax(l, SoftmaxVariant::NoMaxSubtract, ReductionStrategy::sequential(), f32);
    for (float v : p) CHECK(std::isfinite(v));
    CHECK(p[0] > 0.99f);
    CHECK_THROWS_AS(softmax(std::vector<float>{}, SoftmaxVariant::TwoPassMaxSubtract,
                            ReductionStrategy::sequential(), f32),
                    Error);
    CHECK_THROWS_AS(softmax(std::vector<float>{NAN}, SoftmaxVariant::TwoPassMaxSubtract,
                            ReductionStrategy::sequential(), f32),
                    Error);
}

TEST_CASE("trace demo") {
    double d64 = trace_demo(100, 0.02, 0.005, ReductionStrategy::sequential(), f64);
    CHECK(std::fabs(d64 - 1.0) < 1e-9);
    double pw = trace_demo(100, 0.02, 0.005, ReductionStrategy::pairwise(), f32);
    double bl = trace_demo(100, 0.02, 0.005, ReductionStrategy::blocked(128), f32fma);
    CHECK(pw != bl);
    CHECK(std::fabs(pw - 1.0) < 1e-5);
    CHECK(std::fabs(bl - 1.0) < 1e-5);
    // Plain sequential fp32 drifts further: each of 10^4 adds rounds at ulp(1)/2.
    double seq = trace_demo(100, 0.02, 0.005, ReductionStrategy::sequential(), f32);
    CHECK(std::fabs(seq - 1.0) > 1e-5);
    CHECK(std::fabs(seq - 1.0) < 10000 * 0x1p-24);
}
