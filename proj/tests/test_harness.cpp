#include <doctest.h>

#include <cstdlib>

#include "devfp/harness.hpp"

using namespace devfp;

namespace {

ExperimentSpec small_spec(const std::string& exp) {
    ExperimentSpec s;
    s.experiment = exp;
    s.runs = 2;
    s.suite.counts = {6, 10, 2, 2};
    s.l = 3;
    s.k = 2;
    s.k_values = {1, 2};
    s.forest.n_trees = 15;
    return s;
}

const Bench& bench() {
    static Bench b = [] {
        auto s = small_spec("closed-world");
        s.threads = 1;
        return Bench::make(s);
    }();
    return b;
}

}  // namespace

TEST_CASE("report CSV round trip is exact") {
    AccuracyReport r;
    r.experiment = "temp-sweep";
    r.model_seed = 42;
    r.conditions = {{"T=0.3", 0.3}};
    r.add("T=0.3", "engine", 1, 3);
    r.add("T=0.3", "engine", 2, 3);
    r.add("T=0.3", "backend", 7, 7);
    auto csv = r.to_csv();
    CHECK(csv.rfind("experiment,model_seed,condition,axis,accuracy,n_correct,n_total\n", 0) == 0);
    CHECK(AccuracyReport::parse_csv(csv) == r.rows);
    CHECK(r.mean("T=0.3", "engine") == doctest::Approx(0.5));
    CHECK_THROWS_AS(r.mean("T=0.9", "engine"), Error);
    CHECK_THROWS_AS(r.add("x", "engine", 4, 3), Error);
    CHECK_THROWS_AS(AccuracyReport::parse_csv("a,b\n"), Error);
    auto sum = r.summary();
    REQUIRE(sum.size() == 2);
}

TEST_CASE("number formatting is shortest round-trip") {
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
    CHECK(format_number(1.0) == "1");
}

TEST_CASE("spec JSON round trip and validation") {
    auto s = small_spec("k-sweep");
    s.temperatures = {0.6};
    auto back = ExperimentSpec::from_json(s.to_json());
    CHECK(back.to_json() == s.to_json());
    auto bad = s;
    bad.runs = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = s;
    bad.experiment = "nope";
    CHECK_THROWS_AS(bad.validate(), Error);
    CHECK(ExperimentSpec{}.temperatures_or_default() == std::vector<double>{0.0});
    auto big = s;
    big.apply_paper_scale();
    CHECK(big.l == 768);
    CHECK(big.k == 50);
}

TEST_CASE("DEVFP_SEED overrides run and suite seeds") {
    auto s = small_spec("closed-world");
    setenv("DEVFP_SEED", "123", 1);
    s.apply_env();
    unsetenv("DEVFP_SEED");
    CHECK(s.seed == 123);
    CHECK(s.suite.seed == 123);
    CHECK(run_seed(s, 0) != run_seed(s, 1));
}

TEST_CASE("reports do not depend on the worker count") {
    for (const char* exp : {"temp-sweep", "k-sweep"}) {
        auto s = small_spec(exp);
        s.temperatures = {0.0, 0.9};
        if (std::string(exp) == "k-sweep") s.temperatures = {0.9};
        Bench b1 = bench();
        b1.threads = 1;
        Bench b3 = bench();
        b3.threads = 3;
        s.threads = 1;
        auto a = run_experiment(s, b1);
        s.threads = 3;
        auto c = run_experiment(s, b3);
        CHECK(a.to_csv() == c.to_csv());
        CHECK(a.rows.size() == static_cast<size_t>(s.runs) * 3 * (std::string(exp) == "k-sweep" ? 2 : 2));
    }
}
