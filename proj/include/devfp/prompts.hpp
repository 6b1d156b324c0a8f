#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "devfp/prompt.hpp"
#include "devfp/systems.hpp"

namespace devfp {

struct GenOptions {
    // Reference top-2 margin must be below max(delta, delta_rel * |top logit|).
    double delta = 1e-3;
    double delta_rel = 1e-6;
    int budget_factor = 50;     // attempts allowed per requested prompt
    int batch_size = 64;        // batch size the reference system is probed at
    int permutations = 24;      // filler orderings tried per balanced candidate
    int repeat_count = 100;     // P4: R
    int p3_min_len = 1024;
    int p3_max_len = 1536;
};

struct SuiteCounts {
    int p1 = 200, p2 = 400, p3 = 60, p4 = 60;

    int total() const { return p1 + p2 + p3 + p4; }
    static SuiteCounts paper() { return {1700, 5000, 150, 100}; }
};

std::vector<Prompt> gen_p1(int count, uint64_t seed, const SimulatedSystem& ref, const GenOptions& o = {});
std::vector<Prompt> gen_p2(int count, uint64_t seed, const SimulatedSystem& ref, const GenOptions& o = {});
std::vector<Prompt> gen_p3(int count, uint64_t seed, const SimulatedSystem& ref, const GenOptions& o = {});
// With a reference system, candidates whose greedy repeat count falls outside [1, R] are resampled.
std::vector<Prompt> gen_p4(int count, uint64_t seed, const SimulatedSystem* ref = nullptr,
                           const GenOptions& o = {});

struct PromptSuite {
    std::vector<Prompt> prompts;  // P1 || P2 || P3 || P4, ids ascending within a family
    uint64_t seed = 0;
    std::string reference;  // config id of the reference system

    size_t size() const { return prompts.size(); }
    std::vector<int> family_counts() const;  // [P1, P2, P3, P4]
    PromptSuite subset(const std::vector<size_t>& idx) const;
};

// Reference system: the first valid config in lexicographic order.
SystemConfig default_reference();

PromptSuite gen_suite(const SuiteCounts& counts, uint64_t seed, const SimulatedSystem& ref,
                      const GenOptions& o = {});

double score(const Prompt& p, const Response& r);
double score(const Prompt& p, const std::vector<int>& response_tokens);
// Non-overlapping occurrences of pattern in seq.
int count_occurrences(const std::vector<int>& seq, const std::vector<int>& pattern);

void save_jsonl(const PromptSuite& s, const std::string& path);
PromptSuite load_jsonl(const std::string& path);
std::string to_jsonl_line(const Prompt& p);
Prompt prompt_from_json_line(const std::string& line);

}  // namespace devfp
