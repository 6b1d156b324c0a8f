// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "devfp/fingerprint.hpp"
#include "devfp/harness.hpp"
#include "support.hpp"

using namespace devfp;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& what, const std::string& detail) {
    std::printf("%s criterion %d: %s | %s\n", ok ? "PASS" : "FAIL", n, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

const AccumulatorSpec f32{AccWidth::Bits32, false};

void c1() {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<float> v(10000, 0.1f);
    float s = reduce(v, ReductionStrategy::sequential(), f32);
    float p = reduce(v, ReductionStrategy::pairwise(), f32);
    double o = oracle_sum(v);
    double dt = seconds_since(t0);
    bool ok = std::bit_cast<uint32_t>(s) != std::bit_cast<uint32_t>(p) && std::fabs(s - 1000.0) <= 1e-1 &&
              std::fabs(p - 1000.0) <= 1e-1 && std::fabs(o - 1000.0) <= 1e-1 && dt < 1.0;
    report(1, ok, "10000 x 0.1f: sequential vs pairwise bit-different, both within 1e-1 of 1000, < 1 s",
           fmt("sequential=%.9g pairwise=%.9g oracle=%.12g time=%.3fs", s, p, o, dt));
}

void c2() {
    double d64 = trace_demo(100, 0.02, 0.005, ReductionStrategy::sequential(), {AccWidth::Bits64, false});
    double pw = trace_demo(100, 0.02, 0.005, ReductionStrategy::pairwise(), f32);
    double bl = trace_demo(100, 0.02, 0.005, ReductionStrategy::blocked(128), {AccWidth::Bits32, true});
    bool ok = std::fabs(d64 - 1.0) < 1e-9 && pw != bl && std::fabs(pw - 1.0) < 1e-5 && std::fabs(bl - 1.0) < 1e-5;
    report(2, ok, "trace demo: fp64 within 1e-9 of 1; pairwise fp32 != blocked:128 fp32+fma, each within 1e-5",
           fmt("fp64=%.17g pairwise=%.17g blocked128=%.17g", d64, pw, bl));
}

void c3() {
    const auto& l = testing::kSoftmaxWitness;
    auto a = softmax(l, SoftmaxVariant::TwoPassMaxSubtract, ReductionStrategy::sequential(), f32);
    auto b = softmax(l, SoftmaxVariant::StreamingOnePass, ReductionStrategy::sequential(), f32);
    int differ = 0;
    double worst = 0.0, sa = 0.0, sb = 0.0;
    for (size_t i = 0; i < l.size(); ++i) {
        differ += std::bit_cast<uint32_t>(a[i]) != std::bit_cast<uint32_t>(b[i]);
        worst = std::max(worst, static_cast<double>(std::fabs(a[i] - b[i])));
        sa += a[i];
        sb += b[i];
    }
    bool ok = differ >= 1 && worst <= 1e-5 && std::fabs(sa - 1) <= 1e-6 && std::fabs(sb - 1) <= 1e-6;
    report(3, ok, "softmax witness: two-pass vs streaming differ bitwise, agree within 1e-5, sum to 1 within 1e-6",
           fmt("bit-different=%.0f of 8, max|diff|=%.3g, sums %.9f / %.9f", differ, worst, sa, sb));
}

void c4(const Bench& b, double suite_seconds) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<FeatureVector> f(b.systems.size());
    for (size_t i = 0; i < b.systems.size(); ++i) f[i] = collect(b.systems[i], b.suite, 1, 0.0, 1, 64, 0, b.threads)[0];
    int pairs = 0, separated = 0, min_prompts = 1 << 30;
    for (size_t i = 0; i < f.size(); ++i)
        for (size_t j = i + 1; j < f.size(); ++j) {
            ++pairs;
            int d = 0;
            for (size_t k = 0; k < f[i].size(); ++k) d += f[i][k] != f[j][k];
            separated += d > 0;
            min_prompts = std::min(min_prompts, d);
        }
    double dt = seconds_since(t0) + suite_seconds;
    bool ok = pairs == 435 && separated == pairs && dt < 300;
    report(4, ok, "all 30 configs pairwise distinguishable at T=0 (435 pairs), < 5 min",
           fmt("%.0f of %.0f pairs separated, closest pair differs on %.0f prompts, time=%.0fs incl. suite", separated,
               pairs, min_prompts, dt));
}

ExperimentSpec desk(const std::string& exp) {
    ExperimentSpec s;
    s.experiment = exp;
    return s;
}

void c5(const Bench& b) {
    auto s = desk("closed-world");
    auto r = run_closed_world(s, b);
    double e = r.mean("T=0", "engine"), k = r.mean("T=0", "backend"), h = r.mean("T=0", "hardware");
    report(5, e == 1.0 && k == 1.0 && h == 1.0, "closed-world T=0: 100% on every axis over 30 systems",
           fmt("engine=%.4f backend=%.4f hardware=%.4f over %.0f runs", e, k, h, s.runs));
}

// Fraction of held-out configs whose samples are all labelled correctly, per axis.
std::string loco_accuracy(const Bench& b, const std::vector<LabeledSample>& samples) {
    std::string out;
    for (Axis a : kAxes) {
        int ok = 0;
        for (const auto& c : b.configs) {
            std::vector<LabeledSample> train;
            for (const auto& s : samples)
                if (s.config_id() != c.id()) train.push_back(s);
            auto m = train_axis(train, a);
            bool all = true;
            for (const auto& s : samples)
                if (s.config_id() == c.id()) all &= predict(m, s.feature) == c.label(a);
            ok += all;
        }
        out += to_string(a) + fmt(" %.0f/%.0f ", ok, b.configs.size());
    }
    return out;
}

void c6(const Bench& b) {
    auto s = desk("closed-world");
    std::vector<LabeledSample> samples;
    for (size_t i = 0; i < b.systems.size(); ++i) {
        auto x = label_samples(b.configs[i], collect(b.systems[i], b.suite, 2, 0.0, 1, 64, 0, b.threads));
        samples.insert(samples.end(), x.begin(), x.end());
    }
    std::vector<Axis> axes(std::begin(kAxes), std::end(kAxes));
    auto composition = [](const MinimizeResult& r) {
        return fmt("kept %.0f prompts (P1 %.0f, P2 %.0f, P3 %.0f", r.kept.size(), r.family_counts[0],
                   r.family_counts[1], r.family_counts[2]) +
               fmt(", P4 %.0f)", r.family_counts[3]);
    };
    std::string cw;
    try {
        auto r = minimize_prompt_set(b.suite, samples, axes, {}, b.threads, MinimizeMode::ClosedWorld);
        cw = "closed-world elimination " + composition(r);
    } catch (const Error& e) {
        cw = std::string("closed-world elimination failed: ") + e.what();
    }
    try {
        auto r = minimize_prompt_set(b.suite, samples, axes, {}, b.threads);
        bool ok = r.kept.size() < b.suite.size();
        report(6, ok, "minimized strict subset keeps 100% leave-one-config-out accuracy",
               composition(r) + "; " + cw);
    } catch (const Error& e) {
        report(6, false, "minimized strict subset keeps 100% leave-one-config-out accuracy",
               std::string(e.what()) + "; full-suite leave-one-config-out accuracy " + loco_accuracy(b, samples) +
                   "; informational: " + cw);
    }
}

void c7(const Bench& b) {
    auto s = desk("temp-sweep");
    s.temperatures = {0.0, 0.9};
    auto t = run_temperature_sweep(s, b);
    auto k = desk("k-sweep");
    k.temperatures = {0.6};
    k.k_values = {1, 20};
    auto v = run_k_sweep(k, b);
    bool ok = true;
    std::string d;
    double gain = 0.0;
    for (Axis a : kAxes) {
        const auto ax = to_string(a);
        double t0 = t.mean("T=0", ax), t9 = t.mean("T=0.9", ax);
        ok &= t9 <= t0 - 0.05;
        d += ax + fmt(" T0=%.3f T0.9=%.3f ", t0, t9);
        gain += v.mean("k=20", ax) - v.mean("k=1", ax);
        d += fmt("k1=%.3f k20=%.3f; ", v.mean("k=1", ax), v.mean("k=20", ax));
    }
    gain /= 3.0;
    bool vote_ok = gain >= 0.02;
    d += fmt("mean voting gain %.4f (need >= 0.02)", gain);
    // Per-axis reading of the first clause; the hardware axis is discussed in the README.
    report(7, ok && vote_ok, "T=0.9 at least 0.05 below T=0 per axis, and k=20 voting at T=0.6 gains >= 0.02", d);
}

void c8() {
    std::vector<std::vector<double>> X, Xt;
    std::vector<std::string> y, yt;
    testing::xor_dataset(1, 400, X, y);
    testing::xor_dataset(2, 400, Xt, yt);
    ForestParams p;
    p.n_trees = 50;
    p.seed = 5;
    auto m = train_forest(X, y, "xor", p);
    int ok = 0;
    for (size_t i = 0; i < Xt.size(); ++i) ok += predict(m, Xt[i]) == yt[i];
    // Golden: labels of the first 20 held-out points (also pinned with vote counts in the unit tests).
    const char* golden = "ozzzzzzzooooozzzozoz";
    std::string got;
    for (int i = 0; i < 20; ++i) got += predict(m, Xt[static_cast<size_t>(i)])[0];
    double acc = ok / 400.0;
    report(8, acc >= 0.95 && got == golden, "forest: >= 0.95 held-out accuracy on seeded XOR, golden predictions",
           fmt("accuracy=%.4f", acc) + " golden " + (got == golden ? "match" : "MISMATCH " + got));
}

void c9(const Bench& b) {
    auto s = desk("holdout");
    s.holdout_axis = Axis::Hardware;
    s.holdout_labels = {"HW-A"};
    s.runs = 5;
    auto r = run_holdout_component(s, b);
    double e = r.mean("holdout=HW-A", "engine"), k = r.mean("holdout=HW-A", "backend");
    report(9, e >= 0.25 + 0.15, "hardware HW-A withheld: engine accuracy on its configs >= 0.40",
           fmt("engine=%.3f backend=%.3f over %.0f runs (engine chance 0.25)", e, k, s.runs));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void c10(const Bench& b) {
    auto s = desk("temp-sweep");
    s.temperatures = {0.0, 0.6};
    s.runs = 2;
    s.l = 6;
    s.k = 3;
    fs::path root = fs::temp_directory_path() / "devfp_accept_det";
    fs::remove_all(root);
    std::vector<std::string> csv;
    for (int threads : {1, 4, 1}) {
        Bench bt = b;
        bt.threads = threads;
        s.threads = threads;
        fs::path dir = root / std::to_string(csv.size());
        run_temperature_sweep(s, bt).write(dir.string());
        csv.push_back(slurp(dir / "temp-sweep.csv"));
    }
    fs::remove_all(root);
    bool ok = !csv[0].empty() && csv[0] == csv[1] && csv[0] == csv[2];
    report(10, ok, "rerun with identical spec gives byte-identical CSV for 1 and 4 workers",
           fmt("%.0f bytes per CSV, threads 1/4/1", csv[0].size()));
}

void c11(const Bench& b) {
    auto s = desk("mitigation");
    s.runs = 3;
    auto r = run_mitigation(s, b);
    const std::string lo = "sigma=" + format_number(s.sigmas.front());
    const std::string hi = "sigma=" + format_number(s.sigmas.back());
    double a0 = 0, a1 = 0;
    for (Axis a : kAxes) {
        a0 += r.mean(lo, to_string(a)) / 3;
        a1 += r.mean(hi, to_string(a)) / 3;
    }
    double u0 = r.mean(lo, "utility"), u1 = r.mean(hi, "utility");
    std::string curve;
    for (double sg : s.sigmas) {
        const std::string c = "sigma=" + format_number(sg);
        double acc = 0;
        for (Axis a : kAxes) acc += r.mean(c, to_string(a)) / 3;
        curve += fmt("sigma=%g acc=%.3f util=%.3f; ", sg, acc, r.mean(c, "utility"));
    }
    report(11, a1 < a0 && u1 < u0, "largest sigma lowers both fingerprint accuracy and task utility", curve);
}

}  // namespace

int main() {
    c1();
    c2();
    c3();
    c8();

    auto t0 = std::chrono::steady_clock::now();
    ExperimentSpec spec;
    Bench bench = Bench::make(spec);
    const double suite_seconds = seconds_since(t0);
    std::printf("desk suite: %zu prompts in %.1fs, %zu systems, %d threads\n", bench.suite.size(), suite_seconds,
                bench.systems.size(), bench.threads);
    c4(bench, suite_seconds);
    c5(bench);
    c6(bench);
    c9(bench);
    c10(bench);
    c11(bench);
    c7(bench);
    std::printf("%d criteria failed\n", failures);
    return failures;
}
