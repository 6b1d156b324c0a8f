#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "devfp/forest.hpp"
#include "devfp/prompts.hpp"
#include "devfp/systems.hpp"

namespace devfp {

// One score per prompt, in suite order (P1 || P2 || P3 || P4).
using FeatureVector = std::vector<double>;

FeatureVector embed(const PromptSuite& suite, const std::vector<Response>& responses);

// Replicate r (counting from first_replicate) of every prompt, scored.
std::vector<FeatureVector> collect(const SimulatedSystem& sys, const PromptSuite& suite, int replicates,
                                   double temperature, uint64_t seed, int batch_size,
                                   uint64_t first_replicate = 0, int threads = 1);

struct LabeledSample {
    FeatureVector feature;
    std::string engine, backend, hardware;
    int replicate = 0;

    const std::string& label(Axis a) const;
    std::string config_id() const { return engine + "/" + backend + "/" + hardware; }
};

std::vector<LabeledSample> label_samples(const SystemConfig& c, std::vector<FeatureVector> features,
                                         int first_replicate = 0);

ForestModel train_axis(const std::vector<LabeledSample>& samples, Axis axis, const ForestParams& params = {});

struct VoteResult {
    std::vector<std::string> per_sample;
    std::string winner;
    int margin = 0;
};

// Majority vote; ties go to the lexicographically smallest label.
VoteResult vote(const std::vector<std::string>& labels);

using AxisModels = std::map<Axis, ForestModel>;

std::map<Axis, VoteResult> vote_features(const AxisModels& models, const std::vector<FeatureVector>& features);

std::map<Axis, VoteResult> fingerprint_target(const SimulatedSystem& sys, const PromptSuite& suite, int k,
                                              const AxisModels& models, double temperature, uint64_t seed,
                                              int batch_size, uint64_t first_replicate = 0, int threads = 1);

struct MinimizeResult {
    std::vector<size_t> kept;   // prompt indices into the input suite, ascending
    PromptSuite suite;          // the surviving prompts
    std::vector<int> family_counts;  // [P1, P2, P3, P4]
    int evaluations = 0;        // leave-one-config-out evaluations run
};

// Leave-one-config-out: for every config, train on all others and predict its samples.
bool loco_perfect(const std::vector<LabeledSample>& samples, const std::vector<size_t>& features,
                  const std::vector<Axis>& axes, const ForestParams& params, int threads = 1);

// Train on all samples and predict every one of them back.
bool closed_world_perfect(const std::vector<LabeledSample>& samples, const std::vector<size_t>& features,
                          const std::vector<Axis>& axes, const ForestParams& params);

enum class MinimizeMode { LeaveOneConfigOut, ClosedWorld };

// Greedy backward elimination in prompt-id order until no prompt can be dropped;
// a drop is kept when accuracy under the mode's evaluation stays at 100%.
MinimizeResult minimize_prompt_set(const PromptSuite& suite, const std::vector<LabeledSample>& samples,
                                   const std::vector<Axis>& axes, const ForestParams& params = {},
                                   int threads = 1, MinimizeMode mode = MinimizeMode::LeaveOneConfigOut);

// Feature datasets: header "engine,backend,hardware,replicate,<prompt ids...>".
void save_dataset_csv(const std::string& path, const std::vector<std::string>& prompt_ids,
                      const std::vector<LabeledSample>& samples);
std::vector<LabeledSample> load_dataset_csv(const std::string& path, std::vector<std::string>* prompt_ids = nullptr);

std::vector<std::string> prompt_ids(const PromptSuite& suite);

}  // namespace devfp
