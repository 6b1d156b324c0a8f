#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "devfp/fingerprint.hpp"
#include "devfp/harness.hpp"
#include "devfp/parallel.hpp"

using namespace devfp;
using nlohmann::json;

namespace {

SystemConfig parse_config(const std::string& id) {
    auto a = id.find('/'), b = id.rfind('/');
    if (a == std::string::npos || a == b) throw Error("config must look like engine/backend/hardware: " + id);
    return {id.substr(0, a), id.substr(a + 1, b - a - 1), id.substr(b + 1)};
}

uint64_t env_seed(uint64_t fallback) {
    if (const char* e = std::getenv("DEVFP_SEED")) return std::stoull(e);
    return fallback;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

SuiteCounts parse_counts(const std::string& s) {
    SuiteCounts c;
    int v[4];
    if (std::sscanf(s.c_str(), "%d,%d,%d,%d", &v[0], &v[1], &v[2], &v[3]) != 4)
        throw Error("--counts takes p1,p2,p3,p4");
    c.p1 = v[0], c.p2 = v[1], c.p3 = v[2], c.p4 = v[3];
    return c;
}

void print_vote(Axis a, const VoteResult& v) {
    std::cout << to_string(a) << ": " << v.winner << " (margin " << v.margin << " of " << v.per_sample.size()
              << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"devfp: fingerprinting simulated LLM inference systems"};
    app.require_subcommand(1);

    auto* zoo = app.add_subcommand("zoo", "inspect the simulated system zoo");
    zoo->require_subcommand(1);
    auto* zoo_list = zoo->add_subcommand("list", "list valid configs");
    auto* zoo_desc = zoo->add_subcommand("describe", "numerics of one config");
    std::string desc_id;
    zoo_desc->add_option("config", desc_id, "engine/backend/hardware")->required();

    auto* suite = app.add_subcommand("suite", "prompt suites");
    suite->require_subcommand(1);
    auto* suite_gen = suite->add_subcommand("gen", "generate a margin-targeted suite");
    std::string counts = "200,400,60,60", suite_out;
    uint64_t suite_seed = 7, model_seed = 42;
    bool paper_scale = false;
    double delta = GenOptions{}.delta, delta_rel = GenOptions{}.delta_rel;
    suite_gen->add_option("--counts", counts, "p1,p2,p3,p4");
    suite_gen->add_option("--seed", suite_seed);
    suite_gen->add_option("--model-seed", model_seed);
    suite_gen->add_option("--delta", delta);
    suite_gen->add_option("--delta-rel", delta_rel);
    suite_gen->add_flag("--paper-scale", paper_scale);
    suite_gen->add_option("--out", suite_out)->required();

    auto* col = app.add_subcommand("collect", "query one system and write a feature CSV");
    std::string col_config, col_suite, col_out;
    double col_temp = 0.0;
    int col_reps = 1, col_batch = 64;
    uint64_t col_seed = 1;
    col->add_option("--config", col_config)->required();
    col->add_option("--suite", col_suite)->required();
    col->add_option("--temp", col_temp);
    col->add_option("--replicates", col_reps);
    col->add_option("--batch", col_batch);
    col->add_option("--seed", col_seed);
    col->add_option("--model-seed", model_seed);
    col->add_option("--out", col_out)->required();

    auto* train = app.add_subcommand("train", "train one per-axis forest from feature CSVs");
    std::vector<std::string> train_data;
    std::string train_axis_name, train_out;
    ForestParams fp;
    train->add_option("--data", train_data, "feature CSV(s)")->required();
    train->add_option("--axis", train_axis_name, "engine|backend|hardware")->required();
    train->add_option("--trees", fp.n_trees);
    train->add_option("--seed", fp.seed);
    train->add_option("--out", train_out)->required();

    auto* fpr = app.add_subcommand("fingerprint", "identify a target system with k-sample voting");
    std::string fp_target, fp_suite;
    std::vector<std::string> fp_models;
    int fp_k = 20, fp_batch = 64;
    double fp_temp = 0.0;
    uint64_t fp_seed = 2;
    fpr->add_option("--target", fp_target)->required();
    fpr->add_option("--suite", fp_suite)->required();
    fpr->add_option("--k", fp_k);
    fpr->add_option("--models", fp_models, "model JSON files, one per axis")->required();
    fpr->add_option("--temp", fp_temp);
    fpr->add_option("--batch", fp_batch);
    fpr->add_option("--seed", fp_seed);
    fpr->add_option("--model-seed", model_seed);

    auto* exp = app.add_subcommand("exp", "run an experiment");
    std::string exp_name, exp_spec, exp_out;
    int exp_threads = 0;
    exp->add_option("experiment", exp_name)->required()->check(CLI::IsMember(
        std::vector<std::string>(std::begin(kExperiments), std::end(kExperiments))));
    exp->add_option("--spec", exp_spec, "spec.json");
    exp->add_option("--out", exp_out)->required();
    exp->add_option("--threads", exp_threads);
    exp->add_flag("--paper-scale", paper_scale);

    auto* mini = app.add_subcommand("minimize", "reduce a suite by backward elimination at T=0");
    std::string mini_suite, mini_out, mini_mode = "loco";
    mini->add_option("--suite", mini_suite)->required();
    mini->add_option("--out", mini_out, "reduced suite JSONL")->required();
    mini->add_option("--mode", mini_mode, "loco|closed-world")
        ->check(CLI::IsMember(std::vector<std::string>{"loco", "closed-world"}));
    mini->add_option("--model-seed", model_seed);

    auto* demo = app.add_subcommand("demo", "small numerics demos");
    demo->require_subcommand(1);
    auto* demo_trace = demo->add_subcommand("trace", "tr(A^T B) under several accumulation orders");

    CLI11_PARSE(app, argc, argv);

    try {
        const Zoo& z = Zoo::builtin();
        if (zoo_list->parsed()) {
            for (const auto& c : z.valid_configs()) std::cout << c.id() << '\n';
        } else if (zoo_desc->parsed()) {
            auto c = parse_config(desc_id);
            auto p = z.profile(c);
            auto pol = z.policy(c, z.default_batch_size);
            std::cout << c.id() << "\n  " << p.describe() << "\n  chunk="
                      << (pol.chunk_size ? std::to_string(*pol.chunk_size) : "none")
                      << " cache=" << to_string(pol.cache_policy) << " batch_bucket=" << pol.batch_bucket
                      << " (batch " << z.default_batch_size << ")\n";
        } else if (suite_gen->parsed()) {
            SuiteCounts c = paper_scale ? SuiteCounts::paper() : parse_counts(counts);
            GenOptions o;
            o.delta = delta;
            o.delta_rel = delta_rel;
            auto ref = instantiate(default_reference(), model_seed);
            auto s = gen_suite(c, env_seed(suite_seed), ref, o);
            save_jsonl(s, suite_out);
            auto fc = s.family_counts();
            std::cout << "wrote " << s.size() << " prompts (P1 " << fc[0] << ", P2 " << fc[1] << ", P3 " << fc[2]
                      << ", P4 " << fc[3] << ") to " << suite_out << "\n";
        } else if (col->parsed()) {
            auto c = parse_config(col_config);
            auto s = load_jsonl(col_suite);
            auto sys = instantiate(c, model_seed);
            auto f = collect(sys, s, col_reps, col_temp, env_seed(col_seed), col_batch, 0, default_threads());
            save_dataset_csv(col_out, prompt_ids(s), label_samples(c, std::move(f)));
            std::cout << "wrote " << col_reps << " feature vectors to " << col_out << "\n";
        } else if (train->parsed()) {
            std::vector<LabeledSample> all;
            std::vector<std::string> ids;
            for (const auto& path : train_data) {
                std::vector<std::string> these;
                auto s = load_dataset_csv(path, &these);
                if (!ids.empty() && these != ids) throw Error("feature layout differs in " + path);
                ids = these;
                all.insert(all.end(), s.begin(), s.end());
            }
            fp.threads = default_threads();
            auto m = train_axis(all, parse_axis(train_axis_name), fp);
            write_file(train_out, m.to_json());
            std::cout << "trained " << m.trees.size() << " trees on " << all.size() << " samples, "
                      << m.classes.size() << " classes -> " << train_out << "\n";
        } else if (fpr->parsed()) {
            auto s = load_jsonl(fp_suite);
            auto sys = instantiate(parse_config(fp_target), model_seed);
            AxisModels models;
            for (const auto& path : fp_models) {
                auto m = ForestModel::from_json(read_file(path));
                if (m.n_features != static_cast<int>(s.size())) throw Error("model does not match suite: " + path);
                models[parse_axis(m.axis)] = std::move(m);
            }
            auto res = fingerprint_target(sys, s, fp_k, models, fp_temp, env_seed(fp_seed), fp_batch, 1000000,
                                          default_threads());
            for (const auto& [a, v] : res) print_vote(a, v);
        } else if (exp->parsed()) {
            ExperimentSpec spec;
            if (!exp_spec.empty()) spec = ExperimentSpec::from_json(json::parse(read_file(exp_spec)));
            spec.experiment = exp_name;
            if (paper_scale) spec.apply_paper_scale();
            if (exp_threads > 0) spec.threads = exp_threads;
            spec.apply_env();
            spec.validate();
            auto rep = run_experiment(spec);
            rep.write(exp_out);
            for (const auto& r : rep.summary())
                std::printf("%-28s %-9s mean %.4f std %.4f (%d runs)\n", r.condition.c_str(), r.axis.c_str(),
                            r.mean, r.stddev, r.runs);
            std::cout << "wrote " << exp_out << "/" << rep.experiment << ".{csv,json} and plots/\n";
        } else if (mini->parsed()) {
            auto s = load_jsonl(mini_suite);
            std::vector<LabeledSample> samples;
            auto model = shared_model(model_seed);
            for (const auto& c : valid_configs()) {
                auto sys = instantiate(c, model);
                auto l = label_samples(c, collect(sys, s, 1, 0.0, 0, 64, 0, default_threads()));
                samples.insert(samples.end(), l.begin(), l.end());
            }
            std::vector<Axis> axes(std::begin(kAxes), std::end(kAxes));
            auto mode = mini_mode == "loco" ? MinimizeMode::LeaveOneConfigOut : MinimizeMode::ClosedWorld;
            MinimizeResult r = minimize_prompt_set(s, samples, axes, {}, default_threads(), mode);
            save_jsonl(r.suite, mini_out);
            std::cout << "kept " << r.kept.size() << " of " << s.size() << " prompts (P1 " << r.family_counts[0]
                      << ", P2 " << r.family_counts[1] << ", P3 " << r.family_counts[2] << ", P4 "
                      << r.family_counts[3] << ") after " << r.evaluations << " evaluations\n";
        } else if (demo_trace->parsed()) {
            const AccumulatorSpec f32{AccWidth::Bits32, false}, f32fma{AccWidth::Bits32, true},
                f64{AccWidth::Bits64, true};
            struct Row {
                const char* name;
                ReductionStrategy r;
                AccumulatorSpec a;
            };
            const Row rows[] = {{"sequential fp32", ReductionStrategy::sequential(), f32},
                                {"pairwise fp32", ReductionStrategy::pairwise(), f32},
                                {"blocked:128 fp32+fma", ReductionStrategy::blocked(128), f32fma},
                                {"kahan fp32", ReductionStrategy::kahan(), f32},
                                {"sequential fp64", ReductionStrategy::sequential(), f64}};
            std::cout << "tr(A^T B), A = 0.02, B = 0.005, 100 x 100 (exact value 1)\n";
            for (const auto& r : rows) {
                double v = trace_demo(100, 0.02, 0.005, r.r, r.a);
                std::printf("  %-22s %.17g\n", r.name, v);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
