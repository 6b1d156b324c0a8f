#include "devfp/fingerprint.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "devfp/parallel.hpp"

namespace devfp {

std::vector<std::string> prompt_ids(const PromptSuite& suite) {
    std::vector<std::string> ids;
    ids.reserve(suite.size());
    for (const auto& p : suite.prompts) ids.push_back(p.id);
    return ids;
}

FeatureVector embed(const PromptSuite& suite, const std::vector<Response>& responses) {
    std::map<std::string, size_t> at;
    for (size_t i = 0; i < suite.size(); ++i) at[suite.prompts[i].id] = i;
    std::vector<const Response*> by_prompt(suite.size(), nullptr);
    for (const auto& r : responses) {
        auto it = at.find(r.prompt_id);
        if (it == at.end()) throw Error("mismatched response: no prompt with id '" + r.prompt_id + "'");
        if (by_prompt[it->second]) throw Error("duplicate response for prompt '" + r.prompt_id + "'");
        by_prompt[it->second] = &r;
    }
    FeatureVector f(suite.size());
    for (size_t i = 0; i < suite.size(); ++i) {
        if (!by_prompt[i]) throw Error("missing response for prompt '" + suite.prompts[i].id + "'");
        f[i] = score(suite.prompts[i], *by_prompt[i]);
    }
    return f;
}

std::vector<FeatureVector> collect(const SimulatedSystem& sys, const PromptSuite& suite, int replicates,
                                   double temperature, uint64_t seed, int batch_size, uint64_t first_replicate,
                                   int threads) {
    if (replicates < 1) throw Error("replicates must be >= 1");
    const size_t n = suite.size();
    std::vector<FeatureVector> out(static_cast<size_t>(replicates), FeatureVector(n));
    parallel_for(n, threads, [&](size_t i) {
        const Prompt& p = suite.prompts[i];
        for (int r = 0; r < replicates; ++r) {
            auto t = query_tokens(sys, p, temperature, seed, batch_size, first_replicate + static_cast<uint64_t>(r));
            out[static_cast<size_t>(r)][i] = score(p, t);
        }
    });
    return out;
}

const std::string& LabeledSample::label(Axis a) const {
    switch (a) {
        case Axis::Engine: return engine;
        case Axis::Backend: return backend;
        case Axis::Hardware: return hardware;
    }
    return engine;
}

std::vector<LabeledSample> label_samples(const SystemConfig& c, std::vector<FeatureVector> features,
                                         int first_replicate) {
    std::vector<LabeledSample> out;
    out.reserve(features.size());
    for (size_t i = 0; i < features.size(); ++i)
        out.push_back({std::move(features[i]), c.engine, c.backend, c.hardware,
                       first_replicate + static_cast<int>(i)});
    return out;
}

ForestModel train_axis(const std::vector<LabeledSample>& samples, Axis axis, const ForestParams& params) {
    std::vector<std::vector<double>> X;
    std::vector<std::string> y;
    X.reserve(samples.size());
    y.reserve(samples.size());
    for (const auto& s : samples) {
        X.push_back(s.feature);
        y.push_back(s.label(axis));
    }
    return train_forest(X, y, to_string(axis), params);
}

VoteResult vote(const std::vector<std::string>& labels) {
    if (labels.empty()) throw Error("no predictions to vote on");
    std::map<std::string, int> counts;
    for (const auto& l : labels) ++counts[l];
    VoteResult v;
    v.per_sample = labels;
    int best = -1, runner = 0;
    for (const auto& [label, c] : counts) {
        if (c > best) {
            runner = std::max(runner, best);
            best = c;
            v.winner = label;
        } else {
            runner = std::max(runner, c);
        }
    }
    v.margin = best - runner;
    return v;
}

std::map<Axis, VoteResult> vote_features(const AxisModels& models, const std::vector<FeatureVector>& features) {
    std::map<Axis, VoteResult> out;
    for (const auto& [axis, m] : models) {
        std::vector<std::string> labels;
        labels.reserve(features.size());
        for (const auto& f : features) labels.push_back(predict(m, f));
        out[axis] = vote(labels);
    }
    return out;
}

std::map<Axis, VoteResult> fingerprint_target(const SimulatedSystem& sys, const PromptSuite& suite, int k,
                                              const AxisModels& models, double temperature, uint64_t seed,
                                              int batch_size, uint64_t first_replicate, int threads) {
    if (k < 1) throw Error("k must be >= 1");
    return vote_features(models, collect(sys, suite, k, temperature, seed, batch_size, first_replicate, threads));
}

namespace {

std::vector<double> project(const FeatureVector& f, const std::vector<size_t>& cols) {
    std::vector<double> x(cols.size());
    for (size_t j = 0; j < cols.size(); ++j) x[j] = f[cols[j]];
    return x;
}

bool fold_perfect(const std::vector<LabeledSample>& samples, const std::string& held,
                  const std::vector<size_t>& cols, const std::vector<Axis>& axes, const ForestParams& params) {
    std::vector<std::vector<double>> X, Xt;
    std::vector<const LabeledSample*> train, test;
    for (const auto& s : samples) {
        if (s.config_id() == held) {
            test.push_back(&s);
            Xt.push_back(project(s.feature, cols));
        } else {
            train.push_back(&s);
            X.push_back(project(s.feature, cols));
        }
    }
    for (Axis a : axes) {
        std::vector<std::string> y;
        y.reserve(train.size());
        for (const auto* s : train) y.push_back(s->label(a));
        // A label that never occurs in training cannot be predicted.
        if (std::find(y.begin(), y.end(), test.front()->label(a)) == y.end()) return false;
        ForestModel m = train_forest(X, y, to_string(a), params);
        for (size_t i = 0; i < test.size(); ++i)
            if (predict(m, Xt[i]) != test[i]->label(a)) return false;
    }
    return true;
}

}  // namespace

bool loco_perfect(const std::vector<LabeledSample>& samples, const std::vector<size_t>& features,
                  const std::vector<Axis>& axes, const ForestParams& params, int threads) {
    std::set<std::string> ids;
    for (const auto& s : samples) ids.insert(s.config_id());
    std::vector<std::string> folds(ids.begin(), ids.end());
    std::atomic<bool> ok{true};
    ForestParams p = params;
    p.threads = 1;
    parallel_for(folds.size(), threads, [&](size_t i) {
        if (!ok.load()) return;
        if (!fold_perfect(samples, folds[i], features, axes, p)) ok.store(false);
    });
    return ok.load();
}

bool closed_world_perfect(const std::vector<LabeledSample>& samples, const std::vector<size_t>& features,
                          const std::vector<Axis>& axes, const ForestParams& params) {
    std::vector<std::vector<double>> X;
    for (const auto& s : samples) X.push_back(project(s.feature, features));
    for (Axis a : axes) {
        std::vector<std::string> y;
        for (const auto& s : samples) y.push_back(s.label(a));
        ForestModel m = train_forest(X, y, to_string(a), params);
        for (size_t i = 0; i < X.size(); ++i)
            if (predict(m, X[i]) != y[i]) return false;
    }
    return true;
}

MinimizeResult minimize_prompt_set(const PromptSuite& suite, const std::vector<LabeledSample>& samples,
                                   const std::vector<Axis>& axes, const ForestParams& params, int threads,
                                   MinimizeMode mode) {
    if (samples.empty() || axes.empty()) throw Error("minimization needs samples and axes");
    for (const auto& s : samples)
        if (s.feature.size() != suite.size()) throw Error("dimension mismatch");
    auto perfect = [&](const std::vector<size_t>& cols) {
        return mode == MinimizeMode::ClosedWorld ? closed_world_perfect(samples, cols, axes, params)
                                                 : loco_perfect(samples, cols, axes, params, threads);
    };

    MinimizeResult res;
    std::vector<size_t> kept(suite.size());
    for (size_t i = 0; i < kept.size(); ++i) kept[i] = i;
    if (!closed_world_perfect(samples, kept, axes, params))
        throw Error("minimization precondition violated: full-suite accuracy below 100%");
    ++res.evaluations;
    if (!perfect(kept))
        throw Error("minimization precondition violated: leave-one-config-out accuracy below 100% on the full suite");

    std::vector<size_t> order = kept;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return suite.prompts[a].id < suite.prompts[b].id; });
    for (bool changed = true; changed;) {
        changed = false;
        for (size_t drop : order) {
            auto it = std::find(kept.begin(), kept.end(), drop);
            if (it == kept.end() || kept.size() == 1) continue;
            std::vector<size_t> trial = kept;
            trial.erase(trial.begin() + (it - kept.begin()));
            ++res.evaluations;
            if (perfect(trial)) {
                kept = std::move(trial);
                changed = true;
            }
        }
    }
    res.kept = kept;
    res.suite = suite.subset(kept);
    res.family_counts = res.suite.family_counts();
    return res;
}

void save_dataset_csv(const std::string& path, const std::vector<std::string>& ids,
                      const std::vector<LabeledSample>& samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << "engine,backend,hardware,replicate";
    for (const auto& id : ids) out << ',' << id;
    out << '\n';
    char buf[64];
    for (const auto& s : samples) {
        if (s.feature.size() != ids.size()) throw Error("dimension mismatch");
        out << s.engine << ',' << s.backend << ',' << s.hardware << ',' << s.replicate;
        for (double v : s.feature) {
            auto r = std::to_chars(buf, buf + sizeof buf, v);
            out << ',' << std::string_view(buf, static_cast<size_t>(r.ptr - buf));
        }
        out << '\n';
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

std::vector<LabeledSample> load_dataset_csv(const std::string& path, std::vector<std::string>* ids_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error("empty dataset: " + path);
    auto head = split_csv(line);
    if (head.size() < 4 || head[0] != "engine" || head[1] != "backend" || head[2] != "hardware" ||
        head[3] != "replicate")
        throw Error("bad dataset header in " + path);
    const size_t n = head.size() - 4;
    if (ids_out) ids_out->assign(head.begin() + 4, head.end());
    std::vector<LabeledSample> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto c = split_csv(line);
        if (c.size() != n + 4) throw Error("dimension mismatch in " + path);
        LabeledSample s;
        s.engine = c[0];
        s.backend = c[1];
        s.hardware = c[2];
        s.replicate = std::stoi(c[3]);
        s.feature.resize(n);
        for (size_t j = 0; j < n; ++j) {
            const std::string& v = c[j + 4];
            auto r = std::from_chars(v.data(), v.data() + v.size(), s.feature[j]);
            if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw Error("bad number '" + v + "' in " + path);
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace devfp
