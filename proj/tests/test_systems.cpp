#include <doctest.h>

#include <set>

#include "devfp/prompts.hpp"
#include "devfp/systems.hpp"

using namespace devfp;

TEST_CASE("zoo: 30 valid configs in lexicographic order") {
    auto cs = valid_configs();
    CHECK(cs.size() == 30);
    CHECK(std::is_sorted(cs.begin(), cs.end()));
    std::set<std::string> e, b, h;
    for (const auto& c : cs) e.insert(c.engine), b.insert(c.backend), h.insert(c.hardware);
    CHECK(e.size() == 4);
    CHECK(b.size() == 6);
    CHECK(h.size() == 3);
    CHECK(default_reference().id() == "lmdeploy-sim/torch-sdpa-sim/HW-A");
}

TEST_CASE("zoo: invalid engine/backend pairs are rejected") {
    const Zoo& z = Zoo::builtin();
    int invalid = 0;
    for (const auto& e : z.engines)
        for (const auto& b : z.backends) {
            SystemConfig c{e, b, "HW-A"};
            if (z.is_valid(c)) continue;
            ++invalid;
            CHECK_THROWS_WITH_AS(instantiate(c, 42), "unsupported engine/backend combination", Error);
        }
    CHECK(invalid == 4 * 6 - 10);
}

TEST_CASE("zoo: component mapping is injective on numerics") {
    const Zoo& z = Zoo::builtin();
    auto cs = z.valid_configs();
    // (profile, policy) pairs are pairwise distinct, so no two configs compute identically by construction.
    for (size_t i = 0; i < cs.size(); ++i)
        for (size_t j = i + 1; j < cs.size(); ++j) {
            bool same = z.profile(cs[i]) == z.profile(cs[j]) &&
                        z.policy(cs[i], 64) == z.policy(cs[j], 64);
            CHECK_MESSAGE(!same, cs[i].id() << " vs " << cs[j].id());
        }
}

TEST_CASE("zoo: bad config text") {
    CHECK_THROWS_AS(Zoo::from_json_text("{"), Error);
    CHECK_THROWS_AS(Zoo::from_json_text("{}"), Error);
    CHECK_THROWS_AS(Zoo::load("/nonexistent/zoo.json"), Error);
}

TEST_CASE("axis names") {
    for (Axis a : kAxes) CHECK(parse_axis(to_string(a)) == a);
    CHECK_THROWS_AS(parse_axis("gpu"), Error);
}

TEST_CASE("queries are pure functions of (system, prompt, T, seed, batch, replicate)") {
    auto sys = instantiate(default_reference(), 42);
    Prompt p;
    p.id = "x-1";
    p.family = Family::P1;
    p.tokens = {tok::kFillerBegin, tok::kFillerBegin + 3, tok::kCueRare};
    p.max_len = 6;
    auto a = query(sys, p, 0.6, 3, 64, 0);
    sys.clear_memo();
    auto b = query(sys, p, 0.6, 3, 64, 0);
    CHECK(a.tokens == b.tokens);
    CHECK(a.prompt_id == "x-1");
    CHECK(a.text == tok::render(a.tokens));
    CHECK(query_tokens(sys, p, 0.6, 3, 64, 0) == a.tokens);
    CHECK(request_id(p, 0) != request_id(p, 1));
    // Greedy decoding ignores seed and replicate.
    CHECK(query(sys, p, 0.0, 1, 64, 0).tokens == query(sys, p, 0.0, 99, 64, 5).tokens);
}

TEST_CASE("systems built on one seed share weights") {
    auto a = instantiate(valid_configs()[0], 42);
    auto b = instantiate(valid_configs()[5], 42);
    CHECK(a.model.get() == b.model.get());
    CHECK(a.policy.batch_bucket == batch_bucket_for(64));
    CHECK(a.context(256).policy.batch_bucket == batch_bucket_for(256));
}
