#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "devfp/fingerprint.hpp"

using namespace devfp;

namespace {

PromptSuite tiny_suite() {
    PromptSuite s;
    for (int i = 0; i < 3; ++i) {
        Prompt p;
        p.family = Family::P1;
        p.id = "P1-" + std::to_string(i);
        p.expected.targets = {tok::kRareBegin + i};
        s.prompts.push_back(p);
    }
    return s;
}

}  // namespace

TEST_CASE("embed matches responses by prompt id, in suite order") {
    auto s = tiny_suite();
    std::vector<Response> r = {{"P1-2", {tok::kRareBegin + 2}, ""},
                               {"P1-0", {tok::kRareBegin + 1}, ""},
                               {"P1-1", {tok::kRareBegin + 1}, ""}};
    CHECK(embed(s, r) == FeatureVector{0.0, 1.0, 1.0});
    r.pop_back();
    CHECK_THROWS_WITH_AS(embed(s, r), "missing response for prompt 'P1-1'", Error);
    r.push_back({"P1-0", {}, ""});
    CHECK_THROWS_AS(embed(s, r), Error);
    r.back().prompt_id = "P9-9";
    CHECK_THROWS_AS(embed(s, r), Error);
}

TEST_CASE("majority vote and its tie rule") {
    auto v = vote({"b", "a", "b", "c"});
    CHECK(v.winner == "b");
    CHECK(v.margin == 1);
    auto t = vote({"c", "b", "b", "c"});
    CHECK(t.winner == "b");
    CHECK(t.margin == 0);
    CHECK(vote({"x"}).winner == "x");
    CHECK_THROWS_AS(vote({}), Error);
}

TEST_CASE("collect agrees with embed over direct queries") {
    auto sys = instantiate(default_reference(), 42);
    auto s = tiny_suite();
    for (auto& p : s.prompts) {
        p.tokens = {tok::kFillerBegin + 1, tok::kRareBegin + 7, tok::kCueRare};
        p.max_len = 4;
    }
    auto f = collect(sys, s, 3, 0.7, 11, 64, 5, 2);
    REQUIRE(f.size() == 3);
    for (int r = 0; r < 3; ++r) {
        std::vector<Response> rs;
        for (const auto& p : s.prompts) rs.push_back(query(sys, p, 0.7, 11, 64, 5 + static_cast<uint64_t>(r)));
        CHECK(embed(s, rs) == f[static_cast<size_t>(r)]);
    }
    CHECK(collect(sys, s, 3, 0.7, 11, 64, 5, 1) == f);
    CHECK_THROWS_AS(collect(sys, s, 0, 0.0, 1, 64), Error);
}

TEST_CASE("dataset CSV round trip is exact") {
    std::vector<LabeledSample> xs = label_samples({"e", "b", "h"}, {{0.1, 1.0 / 3.0, 1e-300}, {0.0, 1.0, 0.25}}, 4);
    CHECK(xs[1].replicate == 5);
    CHECK(xs[0].config_id() == "e/b/h");
    auto path = (std::filesystem::temp_directory_path() / "devfp_dataset_test.csv").string();
    save_dataset_csv(path, {"P1-0", "P1-1", "P4-0"}, xs);
    std::vector<std::string> ids;
    auto back = load_dataset_csv(path, &ids);
    std::remove(path.c_str());
    CHECK(ids == std::vector<std::string>{"P1-0", "P1-1", "P4-0"});
    REQUIRE(back.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
        CHECK(back[i].feature == xs[i].feature);
        CHECK(back[i].config_id() == xs[i].config_id());
        CHECK(back[i].replicate == xs[i].replicate);
    }
    CHECK_THROWS_AS(save_dataset_csv(path, {"only-one"}, xs), Error);
}

TEST_CASE("minimization on a separable toy set") {
    // Feature 0 alone separates everything; 1 is noise-free but redundant, 2 is constant.
    PromptSuite s = tiny_suite();
    std::vector<LabeledSample> xs;
    const char* eng[] = {"e0", "e1"};
    const char* hw[] = {"h0", "h1"};
    for (int e = 0; e < 2; ++e)
        for (int h = 0; h < 2; ++h)
            for (int r = 0; r < 3; ++r) {
                double code = 2 * e + h;
                xs.push_back({{code, code * 10, 0.5}, eng[e], "b", hw[h], r});
            }
    auto res = minimize_prompt_set(s, xs, {Axis::Engine, Axis::Hardware}, {}, 1, MinimizeMode::ClosedWorld);
    CHECK(res.kept.size() == 1);
    CHECK(res.suite.size() == 1);
    CHECK(res.family_counts == std::vector<int>{1, 0, 0, 0});
    // Leave-one-config-out cannot work here: each held-out code is unseen in training.
    CHECK_THROWS_AS(minimize_prompt_set(s, xs, {Axis::Engine, Axis::Hardware}), Error);
}
