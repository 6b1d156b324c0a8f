#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace devfp {

enum class Family { P1, P2, P3, P4 };

std::string to_string(Family f);
Family parse_family(const std::string& s);

struct Expected {
    std::vector<int> targets;  // P1: rare token; P3: identifier tokens
    int yes_token = -1;        // P2
    int no_token = -1;         // P2
    int repeat_count = 0;      // P4: R
    std::vector<int> pattern;  // P4: unit pattern
    int rival = -1;            // token the target was tied against (P1-P3)
};

struct Prompt {
    Family family = Family::P1;
    std::vector<int> tokens;
    Expected expected;
    std::string id;
    int max_len = 1;
    size_t shared_prefix = 0;  // leading tokens shared across the suite (prefix-cache candidates)
};

struct Response {
    std::string prompt_id;
    std::vector<int> tokens;
    std::string text;
};

}  // namespace devfp
