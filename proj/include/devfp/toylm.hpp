#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "devfp/fpnum.hpp"

namespace devfp {

// Token layout. Everything at or above kRareBegin is a rare token.
namespace tok {
inline constexpr int kStop = 0;
inline constexpr int kCueRare = 1;
inline constexpr int kCueAnswer = 2;
inline constexpr int kCueNumber = 3;
inline constexpr int kCueRepeat = 4;
inline constexpr int kNumMark = 5;
inline constexpr int kYes = 6;
inline constexpr int kNo = 7;
inline constexpr int kDigitBegin = 8;
inline constexpr int kFillerBegin = 18;
inline constexpr int kWordBegin = 42;
inline constexpr int kRareBegin = 50;
inline constexpr int kNumFillers = kWordBegin - kFillerBegin;
inline constexpr int kNumWords = kRareBegin - kWordBegin;

inline constexpr int digit(int d) { return kDigitBegin + d; }
inline constexpr bool is_digit(int t) { return t >= kDigitBegin && t < kFillerBegin; }
inline constexpr bool is_filler(int t) { return t >= kFillerBegin && t < kWordBegin; }
inline constexpr bool is_word(int t) { return t >= kWordBegin && t < kRareBegin; }
inline constexpr bool is_rare(int t) { return t >= kRareBegin; }

std::string render(int t);
std::string render(std::span<const int> toks);
}  // namespace tok

// Hand-placed structure on top of the random weights (see README, "toy model").
struct Circuit {
    float beta = 3.0f;          // magnitude of the structural feature dims
    float kappa_cue = 3.0f;     // cue -> rare / answer attention gain
    float kappa_digit = 5.0f;   // number cue -> digit attention gain
    float kappa_repeat = 9.0f;  // repeat / word -> continuation attention gain
    float gain = 1048576.0f;      // value-projection gain; sets the logit scale
    float stop_count = 15.0f;   // repetitions before the stop token overtakes
};

inline constexpr int kStructDims = 20;

struct ModelWeights {
    int vocab_size = 0;
    int d_model = 0;
    uint64_t seed = 0;
    bool planted = false;
    Circuit circuit;
    Matrix embed;  // vocab x d; the readout is tied to it
    Matrix w_q, w_k, w_v;
};

ModelWeights init_model(uint64_t seed, int vocab_size = 256, int d_model = 64,
                        const Circuit& circuit = {});
uint64_t checksum(const ModelWeights& m);

struct KernelProfile {
    SoftmaxVariant attention_softmax = SoftmaxVariant::TwoPassMaxSubtract;
    ReductionStrategy attention_reduction = ReductionStrategy::sequential();
    // Blocked(base) for the zoo; the effective tile is base * batch_bucket.
    ReductionStrategy linear_reduction = ReductionStrategy::blocked(8);
    AccumulatorSpec acc;

    std::string describe() const;
    bool operator==(const KernelProfile&) const = default;
};

enum class CachePolicy { NoReuse, PrefixReuse };
std::string to_string(CachePolicy p);

struct ExecPolicy {
    std::optional<int> chunk_size;  // none = single-pass prefill
    CachePolicy cache_policy = CachePolicy::NoReuse;
    int batch_bucket = 1;

    void validate() const;
    bool operator==(const ExecPolicy&) const = default;
};

// ceil(log2(b + 1))
int batch_bucket_for(int batch_size);
ReductionStrategy effective_linear(const KernelProfile& p, int batch_bucket);

enum class Provenance { FreshPrefill, ChunkedPrefill, Reused, Decoded };

struct CacheTag {
    Provenance kind = Provenance::FreshPrefill;
    int chunk_index = 0;
};

struct CacheState {
    std::vector<int> tokens;
    std::vector<std::vector<float>> keys;
    std::vector<std::vector<float>> values;
    std::vector<CacheTag> provenance;

    size_t size() const { return keys.size(); }
};

struct SamplerState {
    double temperature = 0.0;
    uint64_t seed = 0;
    uint64_t request_id = 0;
    uint64_t step = 0;
    double noise_sigma = 0.0;  // mitigation noise on logits, 0 = off
};

// Per-token q/k/v projections and the readout under one linear setting.
// Tokens carry no position, so projections are a pure function of the token.
class Projector {
public:
    Projector(const ModelWeights& m, const ReductionStrategy& linear, const AccumulatorSpec& acc);

    std::span<const float> q(int t) const { return row(q_, t); }
    std::span<const float> k(int t) const { return row(k_, t); }
    std::span<const float> v(int t) const { return row(v_, t); }
    std::vector<float> readout(std::span<const float> h) const;

private:
    std::span<const float> row(const std::vector<float>& tab, int t) const {
        return {tab.data() + static_cast<size_t>(t) * d_, static_cast<size_t>(d_)};
    }
    const ModelWeights* m_;
    ReductionStrategy lin_;
    AccumulatorSpec acc_;
    int d_;
    std::vector<float> q_, k_, v_;
};

// Everything needed to run one simulated system at one batch bucket.
struct ExecContext {
    const ModelWeights* model = nullptr;
    KernelProfile profile;
    ExecPolicy policy;
    std::shared_ptr<const Projector> proj;
    std::shared_ptr<const Projector> warm;  // batch-1 projections used for reused prefixes

    static ExecContext make(const ModelWeights& m, const KernelProfile& p, const ExecPolicy& pol);
};

struct PrefillResult {
    CacheState cache;
    std::vector<float> logits;
};

// Attention of one query over keys/values with the backend kernels. With a chunk
// size, each chunk is reduced on its own, materialized to fp32 and merged in order.
std::vector<float> attend(std::span<const float> q, const std::vector<std::vector<float>>& keys,
                          const std::vector<std::vector<float>>& values, const KernelProfile& p,
                          std::optional<int> chunk_size);

// K/V for a prompt without running attention; provenance tags as prefill would set them.
CacheState build_cache(const ExecContext& ctx, std::span<const int> tokens, size_t reuse_prefix = 0);
PrefillResult prefill(const ExecContext& ctx, std::span<const int> tokens, size_t reuse_prefix = 0);
PrefillResult prefill(const ModelWeights& m, std::span<const int> tokens, const KernelProfile& p,
                      const ExecPolicy& pol);

std::vector<float> decode_logits(const ExecContext& ctx, const CacheState& cache);
void append_token(const ExecContext& ctx, CacheState& cache, int token);

int sample(std::span<const float> logits, const SamplerState& s);

int decode_step(const ExecContext& ctx, CacheState& cache, SamplerState& s);
int decode_step(const ModelWeights& m, CacheState& cache, const KernelProfile& p, SamplerState& s);

std::vector<int> generate(const ExecContext& ctx, std::span<const int> prompt, SamplerState s,
                          int max_len, size_t reuse_prefix = 0);
std::vector<int> generate(const ModelWeights& m, std::span<const int> prompt,
                          const KernelProfile& p, const ExecPolicy& pol, const SamplerState& s,
                          int max_len);

}  // namespace devfp
