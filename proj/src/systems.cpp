#include "devfp/systems.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "devfp/rng.hpp"
#include "devfp/zoo_data.hpp"

namespace devfp {

using nlohmann::json;

std::string to_string(Axis a) {
    switch (a) {
        case Axis::Engine: return "engine";
        case Axis::Backend: return "backend";
        case Axis::Hardware: return "hardware";
    }
    return "?";
}

Axis parse_axis(const std::string& s) {
    if (s == "engine") return Axis::Engine;
    if (s == "backend") return Axis::Backend;
    if (s == "hardware") return Axis::Hardware;
    throw Error("unknown axis: " + s);
}

const std::string& SystemConfig::label(Axis a) const {
    switch (a) {
        case Axis::Engine: return engine;
        case Axis::Backend: return backend;
        case Axis::Hardware: return hardware;
    }
    return engine;
}

namespace {

size_t index_of(const std::vector<std::string>& v, const std::string& s) {
    auto it = std::find(v.begin(), v.end(), s);
    return it == v.end() ? v.size() : static_cast<size_t>(it - v.begin());
}

}  // namespace

Zoo Zoo::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("zoo config: ") + e.what());
    }
    Zoo z;
    try {
        z.engines = j.at("engines").get<std::vector<std::string>>();
        z.backends = j.at("backends").get<std::vector<std::string>>();
        z.hardware = j.at("hardware").get<std::vector<std::string>>();
        auto val = j.at("validity").get<std::vector<std::vector<int>>>();
        if (val.size() != z.engines.size()) throw Error("zoo config: validity rows != engines");
        for (auto& row : val) {
            if (row.size() != z.backends.size()) throw Error("zoo config: validity cols != backends");
            std::vector<bool> r;
            for (int x : row) r.push_back(x != 0);
            z.validity.push_back(r);
        }
        z.default_batch_size = j.value("default_batch_size", 64);
        const json& m = j.at("mapping");
        for (auto& name : z.engines) {
            const json& e = m.at("engines").at(name);
            EngineSpec s;
            if (!e.at("chunk_size").is_null()) s.chunk_size = e.at("chunk_size").get<int>();
            std::string cp = e.at("cache_policy").get<std::string>();
            if (cp == "no_reuse") s.cache_policy = CachePolicy::NoReuse;
            else if (cp == "prefix_reuse") s.cache_policy = CachePolicy::PrefixReuse;
            else throw Error("zoo config: bad cache_policy " + cp);
            z.engine_map[name] = s;
        }
        for (auto& name : z.backends) {
            const json& b = m.at("backends").at(name);
            z.backend_map[name] = {parse_softmax(b.at("softmax").get<std::string>()),
                                   ReductionStrategy::parse(b.at("reduction").get<std::string>())};
        }
        for (auto& name : z.hardware) {
            const json& h = m.at("hardware").at(name);
            HardwareSpec s;
            std::string w = h.at("width").get<std::string>();
            if (w == "fp32") s.acc.width = AccWidth::Bits32;
            else if (w == "fp64") s.acc.width = AccWidth::Bits64;
            else throw Error("zoo config: bad width " + w);
            s.acc.fma = h.at("fma").get<bool>();
            s.tile_base = h.at("tile_base").get<int>();
            if (s.tile_base < 2) throw Error("zoo config: tile_base must be >= 2");
            z.hardware_map[name] = s;
        }
    } catch (const json::exception& e) {
        throw Error(std::string("zoo config: ") + e.what());
    }
    return z;
}

Zoo Zoo::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open zoo config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

const Zoo& Zoo::builtin() {
    static const Zoo z = from_json_text(kBuiltinZooJson);
    return z;
}

bool Zoo::is_valid(const SystemConfig& c) const {
    size_t e = index_of(engines, c.engine), b = index_of(backends, c.backend);
    size_t h = index_of(hardware, c.hardware);
    if (e == engines.size() || b == backends.size() || h == hardware.size()) return false;
    return validity[e][b];
}

std::vector<SystemConfig> Zoo::valid_configs() const {
    std::vector<SystemConfig> out;
    for (size_t e = 0; e < engines.size(); ++e)
        for (size_t b = 0; b < backends.size(); ++b)
            if (validity[e][b])
                for (auto& h : hardware) out.push_back({engines[e], backends[b], h});
    std::sort(out.begin(), out.end());
    return out;
}

KernelProfile Zoo::profile(const SystemConfig& c) const {
    if (!is_valid(c)) throw Error("unsupported engine/backend combination");
    const BackendSpec& b = backend_map.at(c.backend);
    const HardwareSpec& h = hardware_map.at(c.hardware);
    KernelProfile p;
    p.attention_softmax = b.softmax;
    p.attention_reduction = b.reduction;
    p.linear_reduction = ReductionStrategy::blocked(h.tile_base);
    p.acc = h.acc;
    return p;
}

ExecPolicy Zoo::policy(const SystemConfig& c, int batch_size) const {
    if (!is_valid(c)) throw Error("unsupported engine/backend combination");
    const EngineSpec& e = engine_map.at(c.engine);
    ExecPolicy p;
    p.chunk_size = e.chunk_size;
    p.cache_policy = e.cache_policy;
    p.batch_bucket = batch_bucket_for(batch_size);
    return p;
}

const std::vector<std::string>& Zoo::labels(Axis a) const {
    switch (a) {
        case Axis::Engine: return engines;
        case Axis::Backend: return backends;
        case Axis::Hardware: return hardware;
    }
    return engines;
}

std::vector<SystemConfig> valid_configs() { return Zoo::builtin().valid_configs(); }

std::shared_ptr<const ModelWeights> shared_model(uint64_t seed, int vocab_size, int d_model) {
    static std::mutex mu;
    static std::map<std::tuple<uint64_t, int, int>, std::weak_ptr<const ModelWeights>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(seed, vocab_size, d_model);
    if (auto sp = cache[key].lock()) return sp;
    auto sp = std::make_shared<const ModelWeights>(init_model(seed, vocab_size, d_model));
    cache[key] = sp;
    return sp;
}

SimulatedSystem::SimulatedSystem() : state_(std::make_shared<State>()) {}

const ExecContext& SimulatedSystem::context(int batch_size) const {
    const int bucket = batch_bucket_for(batch_size);
    {
        std::lock_guard<std::mutex> lock(state_->mu);
        auto it = state_->contexts.find(bucket);
        if (it != state_->contexts.end()) return *it->second;
    }
    ExecPolicy pol = policy;
    pol.batch_bucket = bucket;
    auto ctx = std::make_shared<const ExecContext>(ExecContext::make(*model, profile, pol));
    std::lock_guard<std::mutex> lock(state_->mu);
    auto [it, inserted] = state_->contexts.emplace(bucket, ctx);
    return *it->second;
}

namespace {
constexpr size_t kMemoLimit = 400000;
}

std::vector<float> SimulatedSystem::logits(const Prompt& p, std::span<const int> response_prefix,
                                           int batch_size) const {
    const ExecContext& ctx = context(batch_size);
    // The prompt enters the key as two independent 64-bit hashes plus its length.
    uint64_t h1 = 0xCBF29CE484222325ull, h2 = 0x9E3779B97F4A7C15ull;
    for (int t : p.tokens) {
        h1 = (h1 ^ static_cast<uint32_t>(t)) * 0x100000001B3ull;
        h2 = splitmix64(h2 ^ static_cast<uint32_t>(t));
    }
    std::vector<int> key;
    key.reserve(response_prefix.size() + 8);
    key.push_back(ctx.policy.batch_bucket);
    key.push_back(static_cast<int>(p.shared_prefix));
    key.push_back(static_cast<int>(p.tokens.size()));
    for (uint64_t h : {h1, h2}) {
        key.push_back(static_cast<int>(h & 0xFFFFFFFFu));
        key.push_back(static_cast<int>(h >> 32));
    }
    key.push_back(-1);
    key.insert(key.end(), response_prefix.begin(), response_prefix.end());
    {
        std::lock_guard<std::mutex> lock(state_->mu);
        auto it = state_->memo.find(key);
        if (it != state_->memo.end()) return it->second;
    }
    std::vector<float> out;
    if (response_prefix.empty()) {
        out = prefill(ctx, p.tokens, p.shared_prefix).logits;
    } else {
        CacheState c = build_cache(ctx, p.tokens, p.shared_prefix);
        for (int t : response_prefix) append_token(ctx, c, t);
        out = decode_logits(ctx, c);
    }
    std::lock_guard<std::mutex> lock(state_->mu);
    if (state_->memo.size() >= kMemoLimit) state_->memo.clear();
    state_->memo.emplace(std::move(key), out);
    return out;
}

void SimulatedSystem::clear_memo() const {
    std::lock_guard<std::mutex> lock(state_->mu);
    state_->memo.clear();
}

SimulatedSystem instantiate(const SystemConfig& c, std::shared_ptr<const ModelWeights> model,
                            const Zoo& zoo) {
    if (!zoo.is_valid(c)) throw Error("unsupported engine/backend combination");
    SimulatedSystem s;
    s.config = c;
    s.profile = zoo.profile(c);
    s.policy = zoo.policy(c, zoo.default_batch_size);
    s.model = std::move(model);
    s.default_batch_size = zoo.default_batch_size;
    return s;
}

SimulatedSystem instantiate(const SystemConfig& c, uint64_t model_seed, const Zoo& zoo) {
    return instantiate(c, shared_model(model_seed), zoo);
}

uint64_t request_id(const Prompt& p, uint64_t replicate) {
    return mix4(hash_str(p.id), replicate, 0, 0);
}

std::vector<int> query_tokens(const SimulatedSystem& s, const Prompt& p, double temperature, uint64_t seed,
                              int batch_size, uint64_t replicate) {
    SamplerState st;
    st.temperature = temperature;
    st.seed = seed;
    st.request_id = request_id(p, replicate);
    st.noise_sigma = s.mitigation_sigma;
    std::vector<int> out;
    const int max_len = std::max(1, p.max_len);
    while (true) {
        auto lg = s.logits(p, out, batch_size);
        int t = sample(lg, st);
        ++st.step;
        out.push_back(t);
        if (t == tok::kStop || static_cast<int>(out.size()) >= max_len) break;
    }
    return out;
}

Response query(const SimulatedSystem& s, const Prompt& p, double temperature, uint64_t seed,
               int batch_size, uint64_t replicate) {
    Response r;
    r.prompt_id = p.id;
    r.tokens = query_tokens(s, p, temperature, seed, batch_size, replicate);
    r.text = tok::render(r.tokens);
    return r;
}

}  // namespace devfp
