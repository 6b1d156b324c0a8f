#pragma once

#include <string>
#include <vector>

#include "devfp/rng.hpp"

namespace devfp::testing {

// Seeded 2-D XOR: label "one" when the signs of the coordinates differ.
inline void xor_dataset(uint64_t seed, int n, std::vector<std::vector<double>>& X, std::vector<std::string>& y) {
    CounterRng r(seed, 0x0A, 0);
    for (int i = 0; i < n; ++i) {
        double a = r.uniform(-1, 1), b = r.uniform(-1, 1);
        X.push_back({a, b});
        y.push_back((a > 0) != (b > 0) ? "one" : "zero");
    }
}

// Recorded logits on which the two max-safe softmax formulations round differently
// (first hit of a seed search over N(0, 16) draws).
inline const std::vector<float> kSoftmaxWitness = {
    -0x1.788614p+2f, 0x1.b936d4p+2f, 0x1.0cbc16p+3f,  -0x1.5e483ap+1f,
    0x1.065458p+1f,  -0x1.5c3434p+1f, -0x1.9bd694p+1f, 0x1.98e7dap-2f,
};

}  // namespace devfp::testing
