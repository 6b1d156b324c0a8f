#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "devfp/prompt.hpp"
#include "devfp/toylm.hpp"

namespace devfp {

enum class Axis { Engine, Backend, Hardware };
inline constexpr Axis kAxes[] = {Axis::Engine, Axis::Backend, Axis::Hardware};

std::string to_string(Axis a);
Axis parse_axis(const std::string& s);

struct SystemConfig {
    std::string engine;
    std::string backend;
    std::string hardware;

    std::string id() const { return engine + "/" + backend + "/" + hardware; }
    const std::string& label(Axis a) const;
    auto operator<=>(const SystemConfig&) const = default;
};

struct EngineSpec {
    std::optional<int> chunk_size;
    CachePolicy cache_policy = CachePolicy::NoReuse;
};

struct BackendSpec {
    SoftmaxVariant softmax = SoftmaxVariant::TwoPassMaxSubtract;
    ReductionStrategy reduction;
};

struct HardwareSpec {
    AccumulatorSpec acc;
    int tile_base = 8;
};

// Component names, validity matrix and the component -> numerics mapping table.
struct Zoo {
    std::vector<std::string> engines, backends, hardware;
    std::vector<std::vector<bool>> validity;  // [engine][backend]
    std::map<std::string, EngineSpec> engine_map;
    std::map<std::string, BackendSpec> backend_map;
    std::map<std::string, HardwareSpec> hardware_map;
    int default_batch_size = 64;

    static Zoo from_json_text(const std::string& text);
    static Zoo load(const std::string& path);
    static const Zoo& builtin();

    bool is_valid(const SystemConfig& c) const;
    std::vector<SystemConfig> valid_configs() const;  // lexicographic
    KernelProfile profile(const SystemConfig& c) const;
    ExecPolicy policy(const SystemConfig& c, int batch_size) const;
    const std::vector<std::string>& labels(Axis a) const;
};

std::vector<SystemConfig> valid_configs();

// Weights are shared between all systems built on the same seed.
std::shared_ptr<const ModelWeights> shared_model(uint64_t seed, int vocab_size = 256, int d_model = 64);

class SimulatedSystem {
public:
    SystemConfig config;
    KernelProfile profile;
    ExecPolicy policy;  // at the default batch size
    std::shared_ptr<const ModelWeights> model;
    double mitigation_sigma = 0.0;
    int default_batch_size = 64;

    SimulatedSystem();

    const ExecContext& context(int batch_size) const;
    // Next-token logits after prompt + response_prefix; memoized (pure function).
    std::vector<float> logits(const Prompt& p, std::span<const int> response_prefix, int batch_size) const;
    void clear_memo() const;

private:
    struct State {
        std::mutex mu;
        std::map<int, std::shared_ptr<const ExecContext>> contexts;
        std::map<std::vector<int>, std::vector<float>> memo;
    };
    std::shared_ptr<State> state_;
};

SimulatedSystem instantiate(const SystemConfig& c, uint64_t model_seed, const Zoo& zoo = Zoo::builtin());
SimulatedSystem instantiate(const SystemConfig& c, std::shared_ptr<const ModelWeights> model,
                            const Zoo& zoo = Zoo::builtin());

// Replicate r of prompt p samples on stream (hash(p.id), r).
uint64_t request_id(const Prompt& p, uint64_t replicate);

// Same sampling as query, without rendering text.
std::vector<int> query_tokens(const SimulatedSystem& s, const Prompt& p, double temperature, uint64_t seed,
                              int batch_size, uint64_t replicate = 0);
Response query(const SimulatedSystem& s, const Prompt& p, double temperature, uint64_t seed,
               int batch_size, uint64_t replicate = 0);

}  // namespace devfp
