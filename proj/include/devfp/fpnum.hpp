#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace devfp {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ReduceKind { Sequential, Reversed, Pairwise, Blocked, Kahan };

struct ReductionStrategy {
    ReduceKind kind = ReduceKind::Sequential;
    int tile = 0;  // only meaningful for Blocked

    static ReductionStrategy sequential() { return {ReduceKind::Sequential, 0}; }
    static ReductionStrategy reversed() { return {ReduceKind::Reversed, 0}; }
    static ReductionStrategy pairwise() { return {ReduceKind::Pairwise, 0}; }
    static ReductionStrategy kahan() { return {ReduceKind::Kahan, 0}; }
    static ReductionStrategy blocked(int tile);

    // "sequential", "reversed", "pairwise", "kahan", "blocked:<tile>"
    std::string name() const;
    static ReductionStrategy parse(const std::string& s);

    bool operator==(const ReductionStrategy&) const = default;
};

enum class AccWidth { Bits32, Bits64 };

struct AccumulatorSpec {
    AccWidth width = AccWidth::Bits32;
    bool fma = false;

    std::string name() const;  // "fp32", "fp32+fma", "fp64", "fp64+fma"
    bool operator==(const AccumulatorSpec&) const = default;
};

// Kahan on a 64-bit accumulator is legal but buys nothing; reports flag it.
bool is_redundant(const ReductionStrategy& s, const AccumulatorSpec& acc);

enum class SoftmaxVariant { TwoPassMaxSubtract, StreamingOnePass, NoMaxSubtract };

std::string to_string(SoftmaxVariant v);
SoftmaxVariant parse_softmax(const std::string& s);

// Clamp applied to exponent inputs by NoMaxSubtract.
inline constexpr float kNoMaxClamp = 80.0f;

float reduce(std::span<const float> values, const ReductionStrategy& strategy,
             const AccumulatorSpec& acc);

float dot(std::span<const float> a, std::span<const float> b,
          const ReductionStrategy& strategy, const AccumulatorSpec& acc);

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<float> data;  // row-major

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0f) {}

    float& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    float at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
    std::span<const float> row(int r) const {
        return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
    }
    std::span<float> row(int r) {
        return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
    }
};

std::vector<float> matvec(const Matrix& m, std::span<const float> x,
                          const ReductionStrategy& strategy, const AccumulatorSpec& acc);

std::vector<float> softmax(std::span<const float> logits, SoftmaxVariant variant,
                           const ReductionStrategy& strategy, const AccumulatorSpec& acc);

// tr(A^T B) for constant n x n matrices, accumulated as n*n products. Matrix
// entries are stored at the accumulator width, so fp64 sees 0.02 and not 0.02f.
double trace_demo(int n, double a_val, double b_val, const ReductionStrategy& strategy,
                  const AccumulatorSpec& acc);

// High-accuracy reference sums used as test oracles (compensated, 64-bit).
double oracle_sum(std::span<const float> values);
double oracle_dot(std::span<const float> a, std::span<const float> b);

// Rounding helpers shared with the attention kernels. A value held in an
// accumulator of the given width is always representable as a double.
inline double round_to(double x, AccWidth w) {
    return w == AccWidth::Bits32 ? static_cast<double>(static_cast<float>(x)) : x;
}

// Product term as it enters an accumulator: exact with FMA, rounded to fp32 without.
inline double product_term(float a, float b, bool fma) {
    return fma ? static_cast<double>(a) * static_cast<double>(b)
               : static_cast<double>(a * b);
}

// acc * scale + add, with one rounding under FMA and two without.
inline double scale_add(double acc, double scale, double add, const AccumulatorSpec& spec) {
    if (spec.fma) return round_to(acc * scale + add, spec.width);
    double p = round_to(acc * scale, spec.width);
    return round_to(p + add, spec.width);
}

// Sum of precomputed terms (each already representable as a double) in the
// order prescribed by the strategy; the result is rounded to fp32 once.
float reduce_terms(std::span<const double> terms, const ReductionStrategy& strategy,
                   AccWidth width);

}  // namespace devfp
