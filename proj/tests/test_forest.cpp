#include <doctest.h>

#include "devfp/forest.hpp"
#include "devfp/fpnum.hpp"
#include "support.hpp"

using namespace devfp;

namespace {

struct Golden {
    double a, b;
    const char* label;
    int votes_one;
};

// Predictions of the 50-tree forest below (seed 5) on the first 20 held-out points.
const Golden kGolden[] = {
    {-0x1.646c06a6bc0f8p-3, 0x1.33356f45472e4p-1, "one", 50}, {0x1.d2bb8a86bd7f8p-3, 0x1.42909a75f14c4p-2, "zero", 0},
    {0x1.ef31aa50c81dp-3, 0x1.4bb277c051548p-3, "zero", 0},   {-0x1.7d35ac22ffa6p-1, -0x1.a7c085f05ea94p-2, "zero", 0},
    {0x1.734380c758ca6p-1, 0x1.1950b295c43e4p-2, "zero", 0},  {-0x1.63e5fbf4717d8p-1, -0x1.4c669221697cp-2, "zero", 0},
    {0x1.d60b68bd3087p-4, 0x1.102f635ed0948p-1, "zero", 1},   {0x1.fcb821bc9a87ap-1, 0x1.ec121f2efe3ap-3, "zero", 0},
    {0x1.72c07ed5891fcp-2, -0x1.d7bfc9e3eb14p-5, "one", 50},  {0x1.cb583e70aff7cp-2, -0x1.6d261a137e03cp-2, "one", 50},
    {-0x1.435942c015a7p-1, 0x1.14fa0d4826e54p-2, "one", 50},  {-0x1.695fd7e0ef22cp-1, 0x1.e71349f15e8fp-4, "one", 50},
    {-0x1.b6f19a7950254p-2, 0x1.bfbe7d36261fp-4, "one", 50},  {-0x1.68979cf75619ap-1, -0x1.daf6ca8f33cacp-2, "zero", 0},
    {-0x1.a502a169bcae2p-1, -0x1.fa94786b300e8p-3, "zero", 0}, {-0x1.5989e7b26dcep-5, -0x1.d2680ea871e24p-1, "zero", 0},
    {0x1.f83495450d8c8p-2, -0x1.73144d80cfacep-1, "one", 50}, {-0x1.0eb0d46c6a7f2p-1, -0x1.bd07682b48a38p-2, "zero", 0},
    {-0x1.961092b720d48p-2, 0x1.b3509dcab8702p-1, "one", 50}, {0x1.c457a98de90a2p-1, 0x1.5d33f6a101e7p-1, "zero", 0},
};

ForestModel xor_forest(std::vector<std::vector<double>>& Xt, std::vector<std::string>& yt) {
    std::vector<std::vector<double>> X;
    std::vector<std::string> y;
    testing::xor_dataset(1, 400, X, y);
    testing::xor_dataset(2, 400, Xt, yt);
    ForestParams p;
    p.n_trees = 50;
    p.seed = 5;
    return train_forest(X, y, "xor", p);
}

}  // namespace

TEST_CASE("forest learns XOR and reproduces the golden fixture") {
    std::vector<std::vector<double>> Xt;
    std::vector<std::string> yt;
    auto m = xor_forest(Xt, yt);
    int ok = 0;
    for (size_t i = 0; i < Xt.size(); ++i) ok += predict(m, Xt[i]) == yt[i];
    CHECK(ok >= 380);  // >= 0.95
    for (size_t i = 0; i < std::size(kGolden); ++i) {
        CHECK(Xt[i][0] == kGolden[i].a);
        CHECK(Xt[i][1] == kGolden[i].b);
        auto v = predict_votes(m, Xt[i]);
        CHECK(v.label == kGolden[i].label);
        CHECK(v.votes[0] == kGolden[i].votes_one);  // classes sorted: "one" < "zero"
    }
}

TEST_CASE("forest training is deterministic and thread-count independent") {
    std::vector<std::vector<double>> X;
    std::vector<std::string> y;
    testing::xor_dataset(9, 200, X, y);
    ForestParams p;
    p.n_trees = 20;
    p.seed = 3;
    auto a = train_forest(X, y, "xor", p);
    p.threads = 4;
    auto b = train_forest(X, y, "xor", p);
    p.threads = 1;
    p.seed = 4;
    auto c = train_forest(X, y, "xor", p);
    CHECK(a.to_json() == b.to_json());
    CHECK(a.to_json() != c.to_json());
}

TEST_CASE("forest JSON round trip preserves predictions") {
    std::vector<std::vector<double>> Xt;
    std::vector<std::string> yt;
    auto m = xor_forest(Xt, yt);
    auto back = ForestModel::from_json(m.to_json());
    CHECK(back.to_json() == m.to_json());
    for (const auto& x : Xt) CHECK(predict(back, x) == predict(m, x));
    CHECK_THROWS_AS(ForestModel::from_json("{}"), Error);
    CHECK_THROWS_AS(ForestModel::from_json("[1,2"), Error);
}

TEST_CASE("forest input errors") {
    ForestParams p;
    CHECK_THROWS_AS(train_forest({}, {}, "t", p), Error);
    CHECK_THROWS_AS(train_forest({{1.0}, {2.0, 3.0}}, {"a", "b"}, "t", p), Error);
    CHECK_THROWS_AS(train_forest({{1.0}, {2.0}}, {"a", "a"}, "t", p), Error);
    auto m = train_forest({{1.0}, {2.0}}, {"a", "b"}, "t", p);
    CHECK_THROWS_AS(predict(m, {1.0, 2.0}), Error);
}
