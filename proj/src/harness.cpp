#include "devfp/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "devfp/parallel.hpp"
#include "devfp/rng.hpp"

namespace devfp {

using nlohmann::json;

std::string format_number(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

namespace {

bool known_experiment(const std::string& e) {
    for (const char* x : kExperiments)
        if (e == x) return true;
    return false;
}

[[noreturn]] void bad_spec(const std::string& why) { throw Error("invalid experiment spec: " + why); }

}  // namespace

void ExperimentSpec::validate() const {
    if (!known_experiment(experiment)) bad_spec("unknown experiment '" + experiment + "'");
    if (runs < 1) bad_spec("runs must be >= 1");
    if (l < 1 || k < 1) bad_spec("l and k must be >= 1");
    if (batch_size < 1 || test_batch < 1) bad_spec("batch sizes must be >= 1");
    for (int b : train_batches)
        if (b < 1) bad_spec("batch sizes must be >= 1");
    for (int x : k_values)
        if (x < 1) bad_spec("k values must be >= 1");
    for (double t : temperatures)
        if (!(t >= 0.0) || !std::isfinite(t)) bad_spec("temperatures must be finite and >= 0");
    for (double s : sigmas)
        if (!(s >= 0.0) || !std::isfinite(s)) bad_spec("sigmas must be finite and >= 0");
    const auto& labels = Zoo::builtin().labels(holdout_axis);
    for (const auto& h : holdout_labels)
        if (std::find(labels.begin(), labels.end(), h) == labels.end())
            bad_spec("holdout label '" + h + "' is not a " + to_string(holdout_axis));
    if (experiment == "closed-world") {
        auto ts = temperatures_or_default();
        if (std::find(ts.begin(), ts.end(), 0.0) == ts.end()) bad_spec("closed-world needs T=0 in its temperatures");
    }
    if (experiment == "k-sweep" && k_values.empty()) bad_spec("k-sweep needs k values");
    if (experiment == "batch-gen" && train_batches.empty()) bad_spec("batch-gen needs training batch sizes");
    if (experiment == "mitigation" && sigmas.empty()) bad_spec("mitigation needs sigmas");
}

void ExperimentSpec::apply_paper_scale() {
    l = 768;
    k = 50;
    suite.counts = SuiteCounts::paper();
}

void ExperimentSpec::apply_env() {
    if (const char* e = std::getenv("DEVFP_SEED")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(e, &end, 10);
        if (end == e || *end != '\0') throw Error(std::string("DEVFP_SEED is not an integer: ") + e);
        seed = v;
        suite.seed = v;
    }
}

std::vector<double> ExperimentSpec::temperatures_or_default() const {
    if (!temperatures.empty()) return temperatures;
    if (experiment == "temp-sweep") return {0.0, 0.3, 0.6, 0.9};
    if (experiment == "temp-transfer") return {0.3, 0.6, 0.9};
    if (experiment == "k-sweep") return {0.6};
    return {0.0};
}

json ExperimentSpec::to_json() const {
    json s = {{"p1", suite.counts.p1},
              {"p2", suite.counts.p2},
              {"p3", suite.counts.p3},
              {"p4", suite.counts.p4},
              {"seed", suite.seed},
              {"delta", suite.gen.delta},
              {"delta_rel", suite.gen.delta_rel}};
    if (!suite.path.empty()) s["path"] = suite.path;
    return {{"experiment", experiment},
            {"name", name},
            {"model_seed", model_seed},
            {"seed", seed},
            {"runs", runs},
            {"suite", s},
            {"temperatures", temperatures_or_default()},
            {"l", l},
            {"k", k},
            {"k_values", k_values},
            {"batch_size", batch_size},
            {"train_batches", train_batches},
            {"test_batch", test_batch},
            {"holdout", {{"axis", to_string(holdout_axis)}, {"labels", holdout_labels}}},
            {"sigmas", sigmas},
            {"forest",
             {{"n_trees", forest.n_trees},
              {"max_depth", forest.max_depth},
              {"min_leaf", forest.min_leaf},
              {"features_per_split", forest.features_per_split}}},
            {"threads", threads}};
}

ExperimentSpec ExperimentSpec::from_json(const json& j) {
    try {
        ExperimentSpec s;
        s.experiment = j.value("experiment", s.experiment);
        s.name = j.value("name", s.experiment);
        s.model_seed = j.value("model_seed", s.model_seed);
        s.seed = j.value("seed", s.seed);
        s.runs = j.value("runs", s.runs);
        if (j.value("paper_scale", false)) s.apply_paper_scale();
        if (j.contains("suite")) {
            const json& q = j.at("suite");
            s.suite.counts.p1 = q.value("p1", s.suite.counts.p1);
            s.suite.counts.p2 = q.value("p2", s.suite.counts.p2);
            s.suite.counts.p3 = q.value("p3", s.suite.counts.p3);
            s.suite.counts.p4 = q.value("p4", s.suite.counts.p4);
            s.suite.seed = q.value("seed", s.suite.seed);
            s.suite.gen.delta = q.value("delta", s.suite.gen.delta);
            s.suite.gen.delta_rel = q.value("delta_rel", s.suite.gen.delta_rel);
            s.suite.path = q.value("path", std::string());
        }
        s.temperatures = j.value("temperatures", s.temperatures);
        s.l = j.value("l", s.l);
        s.k = j.value("k", s.k);
        s.k_values = j.value("k_values", s.k_values);
        s.batch_size = j.value("batch_size", s.batch_size);
        s.train_batches = j.value("train_batches", s.train_batches);
        s.test_batch = j.value("test_batch", s.test_batch);
        if (j.contains("holdout")) {
            const json& h = j.at("holdout");
            s.holdout_axis = parse_axis(h.value("axis", std::string("hardware")));
            s.holdout_labels = h.value("labels", s.holdout_labels);
        }
        s.sigmas = j.value("sigmas", s.sigmas);
        if (j.contains("forest")) {
            const json& f = j.at("forest");
            s.forest.n_trees = f.value("n_trees", s.forest.n_trees);
            s.forest.max_depth = f.value("max_depth", s.forest.max_depth);
            s.forest.min_leaf = f.value("min_leaf", s.forest.min_leaf);
            s.forest.features_per_split = f.value("features_per_split", s.forest.features_per_split);
        }
        s.threads = j.value("threads", s.threads);
        s.validate();
        return s;
    } catch (const json::exception& e) {
        bad_spec(e.what());
    }
}

ExperimentSpec ExperimentSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    try {
        return from_json(json::parse(in));
    } catch (const json::exception& e) {
        bad_spec(e.what());
    }
}

void AccuracyReport::add(const std::string& condition, const std::string& axis, int n_correct, int n_total) {
    if (n_total < 1 || n_correct < 0 || n_correct > n_total) throw Error("bad accuracy counts");
    rows.push_back({experiment, model_seed, condition, axis, static_cast<double>(n_correct) / n_total, n_correct,
                    n_total});
}

std::vector<SummaryRow> AccuracyReport::summary() const {
    std::vector<SummaryRow> out;
    for (const auto& [cond, x] : conditions) {
        std::vector<std::string> axes;
        for (const auto& r : rows)
            if (r.condition == cond && std::find(axes.begin(), axes.end(), r.axis) == axes.end())
                axes.push_back(r.axis);
        for (const auto& a : axes) {
            std::vector<double> v;
            for (const auto& r : rows)
                if (r.condition == cond && r.axis == a) v.push_back(r.accuracy);
            SummaryRow s{cond, x, a, static_cast<int>(v.size()), 0.0, 0.0};
            for (double y : v) s.mean += y;
            s.mean /= static_cast<double>(v.size());
            if (v.size() > 1) {
                double ss = 0.0;
                for (double y : v) ss += (y - s.mean) * (y - s.mean);
                s.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
            }
            out.push_back(s);
        }
    }
    return out;
}

double AccuracyReport::mean(const std::string& condition, const std::string& axis) const {
    for (const auto& s : summary())
        if (s.condition == condition && s.axis == axis) return s.mean;
    throw Error("no rows for " + condition + " / " + axis);
}

std::string AccuracyReport::to_csv() const {
    std::string out = "experiment,model_seed,condition,axis,accuracy,n_correct,n_total\n";
    for (const auto& r : rows)
        out += r.experiment + ',' + std::to_string(r.model_seed) + ',' + r.condition + ',' + r.axis + ',' +
               format_number(r.accuracy) + ',' + std::to_string(r.n_correct) + ',' + std::to_string(r.n_total) +
               '\n';
    return out;
}

std::vector<ReportRow> AccuracyReport::parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "experiment,model_seed,condition,axis,accuracy,n_correct,n_total")
        throw Error("bad report header");
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> c;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) c.push_back(cell);
        if (c.size() != 7) throw Error("bad report row: " + line);
        ReportRow r;
        r.experiment = c[0];
        r.model_seed = std::stoull(c[1]);
        r.condition = c[2];
        r.axis = c[3];
        auto res = std::from_chars(c[4].data(), c[4].data() + c[4].size(), r.accuracy);
        if (res.ec != std::errc()) throw Error("bad accuracy in row: " + line);
        r.n_correct = std::stoi(c[5]);
        r.n_total = std::stoi(c[6]);
        rows.push_back(std::move(r));
    }
    return rows;
}

json AccuracyReport::to_json() const {
    json sum = json::array();
    for (const auto& s : summary())
        sum.push_back({{"condition", s.condition},
                       {"x", s.x},
                       {"axis", s.axis},
                       {"runs", s.runs},
                       {"mean", s.mean},
                       {"std", s.stddev}});
    return {{"experiment", experiment},
            {"model_seed", model_seed},
            {"summary", sum},
            {"extra", extra},
            {"runtime", {{"seconds", runtime_s}, {"threads", threads}}}};
}

std::string AccuracyReport::plot_table() const {
    // One line per condition: x, then mean/std per axis in first-seen order.
    auto sum = summary();
    std::vector<std::string> axes;
    for (const auto& s : sum)
        if (std::find(axes.begin(), axes.end(), s.axis) == axes.end()) axes.push_back(s.axis);
    std::string out = "# " + experiment + "\n# x";
    for (const auto& a : axes) out += " " + a + "_mean " + a + "_std";
    out += " condition\n";
    for (const auto& [cond, x] : conditions) {
        out += format_number(x);
        for (const auto& a : axes) {
            auto it = std::find_if(sum.begin(), sum.end(),
                                   [&](const SummaryRow& s) { return s.condition == cond && s.axis == a; });
            if (it == sum.end()) out += " NaN NaN";
            else out += " " + format_number(it->mean) + " " + format_number(it->stddev);
        }
        out += " \"" + cond + "\"\n";
    }
    return out;
}

void AccuracyReport::write(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "plots");
    auto put = [](const fs::path& p, const std::string& text) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw Error("cannot write " + p.string());
        out << text;
    };
    put(fs::path(dir) / (experiment + ".csv"), to_csv());
    put(fs::path(dir) / (experiment + ".json"), to_json().dump(2) + "\n");
    put(fs::path(dir) / "plots" / (experiment + ".dat"), plot_table());
}

PromptSuite make_suite(const ExperimentSpec& spec) {
    if (!spec.suite.path.empty()) return load_jsonl(spec.suite.path);
    auto ref = instantiate(default_reference(), spec.model_seed);
    return gen_suite(spec.suite.counts, spec.suite.seed, ref, spec.suite.gen);
}

Bench Bench::make(const ExperimentSpec& spec, const PromptSuite* suite) {
    Bench b;
    b.suite = suite ? *suite : make_suite(spec);
    if (b.suite.size() == 0) throw Error("empty prompt suite");
    b.configs = valid_configs();
    auto model = shared_model(spec.model_seed);
    for (const auto& c : b.configs) b.systems.push_back(instantiate(c, model));
    b.threads = spec.threads > 0 ? spec.threads : default_threads();
    return b;
}

uint64_t run_seed(const ExperimentSpec& spec, int run) {
    return mix4(spec.seed, static_cast<uint64_t>(run), 0x52554Eull, 0);
}

namespace {

using Features = std::vector<std::vector<FeatureVector>>;  // [system][replicate]

struct Replicates {
    uint64_t first = 0;
    int count = 0;
};

// Train and test draws must never share a sampler stream.
void check_disjoint(const Replicates& a, const Replicates& b) {
    if (a.first < b.first + static_cast<uint64_t>(b.count) && b.first < a.first + static_cast<uint64_t>(a.count))
        throw Error("train and test replicate sets overlap");
}

Features collect_all(const Bench& b, const std::vector<size_t>& which, double T, uint64_t seed, int batch,
                     Replicates reps, double sigma = 0.0) {
    Features out(which.size());
    parallel_for(which.size(), b.threads, [&](size_t i) {
        SimulatedSystem s = b.systems[which[i]];
        s.mitigation_sigma = sigma;
        out[i] = collect(s, b.suite, reps.count, T, seed, batch, reps.first, 1);
    });
    return out;
}

std::vector<size_t> all_systems(const Bench& b) {
    std::vector<size_t> v(b.systems.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = i;
    return v;
}

std::vector<LabeledSample> to_samples(const Bench& b, const std::vector<size_t>& which, const Features& f) {
    std::vector<LabeledSample> out;
    for (size_t i = 0; i < which.size(); ++i) {
        auto s = label_samples(b.configs[which[i]], f[i]);
        out.insert(out.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
    }
    return out;
}

AxisModels train_models(const std::vector<LabeledSample>& samples, const std::vector<Axis>& axes,
                        const ExperimentSpec& spec, uint64_t seed, int threads) {
    ForestParams p = spec.forest;
    p.seed = seed;
    p.threads = threads;
    AxisModels m;
    for (Axis a : axes) m[a] = train_axis(samples, a, p);
    return m;
}

// Votes over the first k test replicates of each system; correct count per axis.
std::map<Axis, int> score_votes(const Bench& b, const std::vector<size_t>& which, const AxisModels& models,
                                const Features& test, int k) {
    std::map<Axis, int> correct;
    for (const auto& [a, m] : models) correct[a] = 0;
    for (size_t i = 0; i < which.size(); ++i) {
        const int kk = std::min<int>(k, static_cast<int>(test[i].size()));
        std::vector<FeatureVector> f(test[i].begin(), test[i].begin() + kk);
        for (const auto& [a, v] : vote_features(models, f))
            if (v.winner == b.configs[which[i]].label(a)) ++correct[a];
    }
    return correct;
}

std::vector<Axis> every_axis() { return {std::begin(kAxes), std::end(kAxes)}; }

AccuracyReport start(const ExperimentSpec& spec, const std::string& experiment, const Bench& b) {
    AccuracyReport r;
    r.experiment = experiment;
    r.model_seed = spec.model_seed;
    r.threads = b.threads;
    r.extra["suite_size"] = b.suite.size();
    r.extra["family_counts"] = b.suite.family_counts();
    r.extra["systems"] = b.systems.size();
    r.extra["runs"] = spec.runs;
    return r;
}

// Shared body of closed-world and the temperature sweep.
AccuracyReport sweep(const ExperimentSpec& spec, const Bench& b, const std::string& name) {
    AccuracyReport rep = start(spec, name, b);
    const auto who = all_systems(b);
    const Replicates train{0, spec.l}, test{static_cast<uint64_t>(spec.l), spec.k};
    check_disjoint(train, test);
    for (double T : spec.temperatures_or_default()) {
        const std::string cond = "T=" + format_number(T);
        rep.conditions.push_back({cond, T});
        for (int run = 0; run < spec.runs; ++run) {
            const uint64_t seed = run_seed(spec, run);
            auto tr = collect_all(b, who, T, seed, spec.batch_size, train);
            auto te = collect_all(b, who, T, seed, spec.batch_size, test);
            auto models = train_models(to_samples(b, who, tr), every_axis(), spec, seed, b.threads);
            auto c = score_votes(b, who, models, te, spec.k);
            for (Axis a : kAxes) rep.add(cond, to_string(a), c[a], static_cast<int>(who.size()));
        }
    }
    return rep;
}

template <typename F>
AccuracyReport timed(F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    AccuracyReport r = f();
    r.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

}  // namespace

AccuracyReport run_closed_world(const ExperimentSpec& spec, const Bench& b) {
    spec.validate();
    auto ts = spec.temperatures_or_default();
    if (std::find(ts.begin(), ts.end(), 0.0) == ts.end()) throw Error("closed-world needs T=0");
    return timed([&] { return sweep(spec, b, "closed-world"); });
}

AccuracyReport run_temperature_sweep(const ExperimentSpec& spec, const Bench& b) {
    spec.validate();
    return timed([&] { return sweep(spec, b, "temp-sweep"); });
}

AccuracyReport run_k_sweep(const ExperimentSpec& spec, const Bench& b) {
    spec.validate();
    return timed([&] {
        AccuracyReport rep = start(spec, "k-sweep", b);
        const auto who = all_systems(b);
        const double T = spec.temperatures_or_default().front();
        rep.extra["temperature"] = T;
        const int kmax = *std::max_element(spec.k_values.begin(), spec.k_values.end());
        const Replicates train{0, spec.l}, test{static_cast<uint64_t>(spec.l), kmax};
        check_disjoint(train, test);
        for (int k : spec.k_values) rep.conditions.push_back({"k=" + std::to_string(k), k});
        std::map<int, std::vector<std::map<Axis, int>>> got;
        for (int run = 0; run < spec.runs; ++run) {
            const uint64_t seed = run_seed(spec, run);
            auto tr = collect_all(b, who, T, seed, spec.batch_size, train);
            auto te = collect_all(b, who, T, seed, spec.batch_size, test);
            auto models = train_models(to_samples(b, who, tr), every_axis(), spec, seed, b.threads);
            for (int k : spec.k_values) got[k].push_back(score_votes(b, who, models, te, k));
        }
        for (int k : spec.k_values)
            for (Axis a : kAxes)
                for (const auto& c : got[k])
                    rep.add("k=" + std::to_string(k), to_string(a), c.at(a), static_cast<int>(who.size()));
        return rep;
    });
}

AccuracyReport run_holdout_component(const ExperimentSpec& spec, const Bench& b) {
    spec.validate();
    return timed([&] {
        AccuracyReport rep = start(spec, "holdout", b);
        const Axis ax = spec.holdout_axis;
        auto labels = spec.holdout_labels.empty() ? Zoo::builtin().labels(ax) : spec.holdout_labels;
        const double T = spec.temperatures_or_default().front();
        rep.extra["temperature"] = T;
        rep.extra["axis"] = to_string(ax);
        rep.extra["withheld_axis_accuracy"] = "n/a";
        std::vector<Axis> rest;
        for (Axis a : kAxes)
            if (a != ax) rest.push_back(a);
        const Replicates train{0, spec.l}, test{static_cast<uint64_t>(spec.l), spec.k};
        check_disjoint(train, test);
        for (size_t li = 0; li < labels.size(); ++li) {
            const std::string cond = "holdout=" + labels[li];
            rep.conditions.push_back({cond, static_cast<double>(li)});
            std::vector<size_t> in, out;
            for (size_t i = 0; i < b.configs.size(); ++i)
                (b.configs[i].label(ax) == labels[li] ? out : in).push_back(i);
            if (out.empty()) throw Error("no config contains " + labels[li]);
            for (int run = 0; run < spec.runs; ++run) {
                const uint64_t seed = run_seed(spec, run);
                auto tr = collect_all(b, in, T, seed, spec.batch_size, train);
                auto te = collect_all(b, out, T, seed, spec.batch_size, test);
                auto models = train_models(to_samples(b, in, tr), rest, spec, seed, b.threads);
                auto c = score_votes(b, out, models, te, spec.k);
                for (Axis a : rest) rep.add(cond, to_string(a), c[a], static_cast<int>(out.size()));
            }
        }
        return rep;
    });
}

AccuracyReport run_batch_generalization(const ExperimentSpec& spec, const Bench& b) {
    spec.validate();
    return timed([&] {
        AccuracyReport rep = start(spec, "batch-gen", b);
        const auto who = all_systems(b);
        const double T = spec.temperatures_or_default().front();
        rep.extra["temperature"] = T;
        std::string tb;
        for (int x : spec.train_batches) tb += (tb.empty() ? "" : "+") + std::to_string(x);
        const std::string gen = "train=" + tb + "/test=" + std::to_string(spec.test_batch);
        const std::string ctl = "train=" + std::to_string(spec.test_batch) + "/test=" + std::to_string(spec.test_batch);
        rep.conditions = {{gen, 0.0}, {ctl, 1.0}};
        const Replicates train{0, spec.l}, test{static_cast<uint64_t>(spec.l), spec.k};
        check_disjoint(train, test);
        std::vector<std::map<Axis, int>> g, m;
        for (int run = 0; run < spec.runs; ++run) {
            const uint64_t seed = run_seed(spec, run);
            std::vector<LabeledSample> mixed;
            for (int batch : spec.train_batches) {
                auto s = to_samples(b, who, collect_all(b, who, T, seed, batch, train));
                mixed.insert(mixed.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
            }
            auto te = collect_all(b, who, T, seed, spec.test_batch, test);
            g.push_back(score_votes(b, who, train_models(mixed, every_axis(), spec, seed, b.threads), te, spec.k));
            auto matched = to_samples(b, who, collect_all(b, who, T, seed, spec.test_batch, train));
            m.push_back(score_votes(b, who, train_models(matched, every_axis(), spec, seed, b.threads), te, spec.k));
        }
        auto emit = [&](const std::string& cond, const std::vector<std::map<Axis, int>>& res) {
            for (Axis a : kAxes)
                for (const auto& c : res) rep.add(cond, to_string(a), c.at(a), static_cast<int>(who.size()));
        };
        emit(gen, g);
        emit(ctl, m);
        return rep;
    });
}

AccuracyReport run_temperature_transfer(const ExperimentSpec& spec, const Bench& b) {
    spec.validate();
    return timed([&] {
        AccuracyReport rep = start(spec, "temp-transfer", b);
        const auto who = all_systems(b);
        const auto ts = spec.temperatures_or_default();
        const Replicates train{0, spec.l}, test{static_cast<uint64_t>(spec.l), spec.k};
        check_disjoint(train, test);
        // cell (i, j): train at ts[i], test at ts[j]
        std::map<std::pair<size_t, size_t>, std::vector<std::map<Axis, int>>> cells;
        for (int run = 0; run < spec.runs; ++run) {
            const uint64_t seed = run_seed(spec, run);
            std::vector<AxisModels> models;
            std::vector<Features> tests;
            for (double T : ts) {
                auto tr = collect_all(b, who, T, seed, spec.batch_size, train);
                models.push_back(train_models(to_samples(b, who, tr), every_axis(), spec, seed, b.threads));
                tests.push_back(collect_all(b, who, T, seed, spec.batch_size, test));
            }
            for (size_t i = 0; i < ts.size(); ++i)
                for (size_t j = 0; j < ts.size(); ++j)
                    cells[{i, j}].push_back(score_votes(b, who, models[i], tests[j], spec.k));
        }
        double matched = 0.0, transfer = 0.0;
        int nm = 0, nt = 0;
        for (size_t i = 0; i < ts.size(); ++i)
            for (size_t j = 0; j < ts.size(); ++j) {
                const std::string cond = "train=" + format_number(ts[i]) + "/test=" + format_number(ts[j]);
                rep.conditions.push_back({cond, static_cast<double>(i * ts.size() + j)});
                for (Axis a : kAxes)
                    for (const auto& c : cells[{i, j}]) {
                        rep.add(cond, to_string(a), c.at(a), static_cast<int>(who.size()));
                        (i == j ? matched : transfer) += rep.rows.back().accuracy;
                        ++(i == j ? nm : nt);
                    }
            }
        rep.extra["mean_matched"] = nm ? matched / nm : 0.0;
        rep.extra["mean_transfer"] = nt ? transfer / nt : 0.0;
        return rep;
    });
}

AccuracyReport run_mitigation(const ExperimentSpec& spec, const Bench& b) {
    spec.validate();
    return timed([&] {
        AccuracyReport rep = start(spec, "mitigation", b);
        const auto who = all_systems(b);
        const double T = spec.temperatures_or_default().front();
        rep.extra["temperature"] = T;
        const Replicates train{0, spec.l}, test{static_cast<uint64_t>(spec.l), spec.k};
        check_disjoint(train, test);
        std::vector<size_t> task;  // P1-P3 prompts carry a right answer
        for (size_t i = 0; i < b.suite.size(); ++i)
            if (b.suite.prompts[i].family != Family::P4) task.push_back(i);
        for (double sigma : spec.sigmas) {
            const std::string cond = "sigma=" + format_number(sigma);
            rep.conditions.push_back({cond, sigma});
            std::vector<std::map<Axis, int>> acc;
            std::vector<std::pair<int, int>> util;
            for (int run = 0; run < spec.runs; ++run) {
                const uint64_t seed = run_seed(spec, run);
                auto tr = collect_all(b, who, T, seed, spec.batch_size, train, sigma);
                auto te = collect_all(b, who, T, seed, spec.batch_size, test, sigma);
                auto models = train_models(to_samples(b, who, tr), every_axis(), spec, seed, b.threads);
                acc.push_back(score_votes(b, who, models, te, spec.k));
                int ok = 0, n = 0;
                for (const auto& sys : te)
                    for (const auto& f : sys)
                        for (size_t i : task) {
                            ok += f[i] >= 1.0;
                            ++n;
                        }
                util.push_back({ok, n});
            }
            for (Axis a : kAxes)
                for (const auto& c : acc) rep.add(cond, to_string(a), c.at(a), static_cast<int>(who.size()));
            for (const auto& [ok, n] : util) rep.add(cond, "utility", ok, n);
        }
        return rep;
    });
}

AccuracyReport run_experiment(const ExperimentSpec& spec, const Bench& b) {
    const std::string& e = spec.experiment;
    if (e == "closed-world") return run_closed_world(spec, b);
    if (e == "temp-sweep") return run_temperature_sweep(spec, b);
    if (e == "k-sweep") return run_k_sweep(spec, b);
    if (e == "holdout") return run_holdout_component(spec, b);
    if (e == "batch-gen") return run_batch_generalization(spec, b);
    if (e == "temp-transfer") return run_temperature_transfer(spec, b);
    if (e == "mitigation") return run_mitigation(spec, b);
    throw Error("unknown experiment '" + e + "'");
}

AccuracyReport run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    return run_experiment(spec, Bench::make(spec));
}

}  // namespace devfp
