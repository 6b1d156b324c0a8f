#include "devfp/toylm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "devfp/rng.hpp"

namespace devfp {

namespace tok {

std::string render(int t) {
    switch (t) {
        case kStop: return "<stop>";
        case kCueRare: return "<rare?>";
        case kCueAnswer: return "<answer?>";
        case kCueNumber: return "<number?>";
        case kCueRepeat: return "<repeat>";
        case kNumMark: return "#";
        case kYes: return "yes";
        case kNo: return "no";
        default: break;
    }
    if (is_digit(t)) return std::to_string(t - kDigitBegin);
    if (is_filler(t)) return "f" + std::to_string(t - kFillerBegin);
    if (is_word(t)) return "w" + std::to_string(t - kWordBegin);
    return "r" + std::to_string(t - kRareBegin);
}

std::string render(std::span<const int> toks) {
    std::string s;
    for (size_t i = 0; i < toks.size(); ++i) {
        if (i) s += ' ';
        s += render(toks[i]);
    }
    return s;
}

}  // namespace tok

namespace {

// Struct dims of the planted circuit.
enum Dim {
    kDimRare = 0,
    kDimAnswer = 1,
    kDimDigit = 2,
    kDimWord = 3,
    kDimCont = 4,
    kDimQRare = 5,
    kDimQAnswer = 6,
    kDimQNumber = 7,
    kDimQRepeat = 8,
    kDimMark = 9,
    kDimWordId = 10,  // 10..17, one per word token
};

enum MatId : uint64_t { kMatEmbed = 1, kMatQ = 2, kMatK = 3, kMatV = 4 };

void fill_uniform(Matrix& m, uint64_t seed, MatId id, float half_width) {
    const uint64_t dims = (static_cast<uint64_t>(m.rows) << 32) | static_cast<uint64_t>(m.cols);
    for (size_t i = 0; i < m.data.size(); ++i) {
        double u = to_unit(mix4(seed, id, i, dims));
        m.data[i] = static_cast<float>((2.0 * u - 1.0) * half_width);
    }
}

void plant(ModelWeights& w) {
    const Circuit& c = w.circuit;
    const float b = c.beta;
    Matrix& e = w.embed;
    const int d = w.d_model;
    for (int t = 0; t < w.vocab_size; ++t)
        for (int j = 0; j < kStructDims; ++j) e.at(t, j) = 0.0f;
    auto zero_content = [&](int t) {
        for (int j = kStructDims; j < d; ++j) e.at(t, j) = 0.0f;
    };
    for (int t = tok::kStop; t <= tok::kNumMark; ++t) zero_content(t);
    for (int t = tok::kRareBegin; t < w.vocab_size; ++t) e.at(t, kDimRare) = b;
    e.at(tok::kYes, kDimAnswer) = b;
    e.at(tok::kNo, kDimAnswer) = b;
    for (int t = tok::kDigitBegin; t < tok::kFillerBegin; ++t) e.at(t, kDimDigit) = b;
    for (int j = 0; j < tok::kNumWords; ++j) {
        int t = tok::kWordBegin + j;
        zero_content(t);
        e.at(t, kDimWord) = b;
        e.at(t, kDimCont) = b;
        e.at(t, kDimWordId + j) = b;
    }
    e.at(tok::kCueRare, kDimQRare) = b;
    e.at(tok::kCueAnswer, kDimQAnswer) = b;
    e.at(tok::kCueNumber, kDimQNumber) = b;
    e.at(tok::kCueRepeat, kDimQRepeat) = b;
    e.at(tok::kCueRepeat, kDimCont) = b;
    e.at(tok::kNumMark, kDimMark) = b;
    // A word's own logit gains 3*beta^2 per unit of attention mass, the stop
    // token lambda*beta^2. Once the word holds stop_count times the mass of the
    // repeat cue the stop token wins.
    const float lambda = 3.0f + 1.0f / c.stop_count;
    e.at(tok::kStop, kDimWord) = lambda * b;

    for (int j = 0; j < kStructDims; ++j) w.w_k.at(j, j) += 1.0f;
    auto route = [&](int from, int to, float gain) { w.w_q.at(to, from) += gain; };
    route(kDimQRare, kDimRare, c.kappa_cue);
    route(kDimQAnswer, kDimAnswer, c.kappa_cue);
    route(kDimQNumber, kDimDigit, c.kappa_digit);
    route(kDimDigit, kDimDigit, c.kappa_digit);
    route(kDimWord, kDimCont, c.kappa_repeat);
    route(kDimQRepeat, kDimCont, c.kappa_repeat);
    for (int j = 0; j < d; ++j) w.w_v.at(j, j) += c.gain;
}

}  // namespace

ModelWeights init_model(uint64_t seed, int vocab_size, int d_model, const Circuit& circuit) {
    if (vocab_size < 2 || d_model < 2) throw Error("model dims must be >= 2");
    ModelWeights w;
    w.vocab_size = vocab_size;
    w.d_model = d_model;
    w.seed = seed;
    w.circuit = circuit;
    w.embed = Matrix(vocab_size, d_model);
    w.w_q = Matrix(d_model, d_model);
    w.w_k = Matrix(d_model, d_model);
    w.w_v = Matrix(d_model, d_model);
    const float a = 1.0f / std::sqrt(static_cast<float>(d_model));
    fill_uniform(w.embed, seed, kMatEmbed, 1.0f);
    fill_uniform(w.w_q, seed, kMatQ, a);
    fill_uniform(w.w_k, seed, kMatK, a);
    fill_uniform(w.w_v, seed, kMatV, a);
    w.planted = vocab_size >= 64 && d_model >= 32;
    if (w.planted) plant(w);
    return w;
}

uint64_t checksum(const ModelWeights& m) {
    uint64_t h = 0xCBF29CE484222325ull;
    auto eat = [&](const Matrix& x) {
        for (float f : x.data) {
            uint32_t bits;
            std::memcpy(&bits, &f, sizeof bits);
            for (int i = 0; i < 4; ++i) {
                h ^= (bits >> (8 * i)) & 0xFFu;
                h *= 0x100000001B3ull;
            }
        }
    };
    eat(m.embed);
    eat(m.w_q);
    eat(m.w_k);
    eat(m.w_v);
    return h;
}

std::string KernelProfile::describe() const {
    return "softmax=" + to_string(attention_softmax) + " attn=" + attention_reduction.name() +
           " linear=" + linear_reduction.name() + " acc=" + acc.name();
}

std::string to_string(CachePolicy p) {
    return p == CachePolicy::NoReuse ? "no_reuse" : "prefix_reuse";
}

void ExecPolicy::validate() const {
    if (chunk_size && *chunk_size < 8) throw Error("chunk_size must be >= 8");
    if (batch_bucket < 1) throw Error("batch_bucket must be >= 1");
}

int batch_bucket_for(int batch_size) {
    if (batch_size < 1) throw Error("batch size must be >= 1");
    int b = 0;
    while ((1ll << b) < static_cast<long long>(batch_size) + 1) ++b;
    return b;
}

ReductionStrategy effective_linear(const KernelProfile& p, int batch_bucket) {
    if (p.linear_reduction.kind != ReduceKind::Blocked) return p.linear_reduction;
    return ReductionStrategy::blocked(p.linear_reduction.tile * batch_bucket);
}

Projector::Projector(const ModelWeights& m, const ReductionStrategy& linear,
                     const AccumulatorSpec& acc)
    : m_(&m), lin_(linear), acc_(acc), d_(m.d_model) {
    const size_t n = static_cast<size_t>(m.vocab_size) * d_;
    q_.resize(n);
    k_.resize(n);
    v_.resize(n);
    for (int t = 0; t < m.vocab_size; ++t) {
        auto x = m.embed.row(t);
        auto q = matvec(m.w_q, x, lin_, acc_);
        auto k = matvec(m.w_k, x, lin_, acc_);
        auto v = matvec(m.w_v, x, lin_, acc_);
        std::copy(q.begin(), q.end(), q_.begin() + static_cast<size_t>(t) * d_);
        std::copy(k.begin(), k.end(), k_.begin() + static_cast<size_t>(t) * d_);
        std::copy(v.begin(), v.end(), v_.begin() + static_cast<size_t>(t) * d_);
    }
}

std::vector<float> Projector::readout(std::span<const float> h) const {
    std::vector<float> out(static_cast<size_t>(m_->vocab_size));
    for (int t = 0; t < m_->vocab_size; ++t) out[t] = dot(m_->embed.row(t), h, lin_, acc_);
    return out;
}

ExecContext ExecContext::make(const ModelWeights& m, const KernelProfile& p, const ExecPolicy& pol) {
    pol.validate();
    ExecContext c;
    c.model = &m;
    c.profile = p;
    c.policy = pol;
    c.proj = std::make_shared<Projector>(m, effective_linear(p, pol.batch_bucket), p.acc);
    if (pol.cache_policy == CachePolicy::PrefixReuse)
        c.warm = pol.batch_bucket == 1
                     ? c.proj
                     : std::make_shared<Projector>(m, effective_linear(p, 1), p.acc);
    return c;
}

namespace {

// Running attention state; z and o hold values representable at the accumulator width.
struct AttnState {
    float m = -std::numeric_limits<float>::infinity();
    double z = 0.0;
    std::vector<double> o;
    double cz = 0.0;         // Kahan compensation
    std::vector<double> co;  // Kahan compensation
    bool empty = true;
};

void kahan_add(double& s, double& c, double term, AccWidth w) {
    double y = round_to(term - c, w);
    double t = round_to(s + y, w);
    c = round_to(round_to(t - s, w) - y, w);
    s = t;
}

struct Attn {
    const std::vector<float>& scores;
    const std::vector<std::vector<float>>& values;
    const KernelProfile& p;
    size_t d;

    AttnState fresh() const {
        AttnState s;
        s.o.assign(d, 0.0);
        return s;
    }

    void push(AttnState& st, size_t i, bool kahan) const {
        const AccumulatorSpec& acc = p.acc;
        const float x = scores[i];
        const auto& v = values[i];
        if (st.empty || x > st.m) {
            double scale = st.empty ? 0.0 : static_cast<double>(std::exp(st.m - x));
            st.z = scale_add(st.z, scale, 1.0, acc);
            for (size_t j = 0; j < d; ++j) st.o[j] = scale_add(st.o[j], scale, v[j], acc);
            if (kahan) {
                st.cz = round_to(st.cz * scale, acc.width);
                for (size_t j = 0; j < d; ++j) st.co[j] = round_to(st.co[j] * scale, acc.width);
            }
            st.m = x;
            st.empty = false;
            return;
        }
        const float e = std::exp(x - st.m);
        if (kahan) {
            kahan_add(st.z, st.cz, e, acc.width);
            for (size_t j = 0; j < d; ++j)
                kahan_add(st.o[j], st.co[j], product_term(e, v[j], acc.fma), acc.width);
        } else {
            st.z = round_to(st.z + e, acc.width);
            for (size_t j = 0; j < d; ++j)
                st.o[j] = round_to(st.o[j] + product_term(e, v[j], acc.fma), acc.width);
        }
    }

    AttnState seq(size_t lo, size_t hi) const {
        AttnState s = fresh();
        for (size_t i = lo; i < hi; ++i) push(s, i, false);
        return s;
    }

    AttnState merge(const AttnState& a, const AttnState& b) const {
        if (b.empty) return a;
        if (a.empty) return b;
        const bool b_wins = b.m > a.m;
        const AttnState& lo = b_wins ? a : b;
        const AttnState& hi = b_wins ? b : a;
        const double f = static_cast<double>(std::exp(lo.m - hi.m));
        AttnState r = fresh();
        r.empty = false;
        r.m = hi.m;
        r.z = scale_add(lo.z, f, hi.z, p.acc);
        for (size_t j = 0; j < d; ++j) r.o[j] = scale_add(lo.o[j], f, hi.o[j], p.acc);
        return r;
    }

    AttnState pair(size_t lo, size_t hi) const {
        if (hi - lo <= 2) return seq(lo, hi);
        size_t mid = lo + (hi - lo) / 2;
        return merge(pair(lo, mid), pair(mid, hi));
    }

    AttnState streaming(size_t lo, size_t hi) const {
        const ReductionStrategy& st = p.attention_reduction;
        switch (st.kind) {
            case ReduceKind::Sequential: return seq(lo, hi);
            case ReduceKind::Reversed: {
                AttnState s = fresh();
                for (size_t i = hi; i-- > lo;) push(s, i, false);
                return s;
            }
            case ReduceKind::Pairwise: return pair(lo, hi);
            case ReduceKind::Blocked: {
                AttnState total = fresh();
                const size_t tile = static_cast<size_t>(st.tile);
                for (size_t a = lo; a < hi; a += tile) total = merge(total, seq(a, std::min(hi, a + tile)));
                return total;
            }
            case ReduceKind::Kahan: {
                AttnState s = fresh();
                s.co.assign(d, 0.0);
                for (size_t i = lo; i < hi; ++i) push(s, i, true);
                return s;
            }
        }
        return fresh();
    }

    // Two-pass and no-max variants: explicit exponentials, then ordered reductions.
    AttnState explicit_exp(size_t lo, size_t hi, bool subtract_max) const {
        AttnState s = fresh();
        s.empty = lo == hi;
        if (s.empty) return s;
        float m = 0.0f;
        if (subtract_max) m = *std::max_element(scores.begin() + lo, scores.begin() + hi);
        const size_t n = hi - lo;
        std::vector<float> e(n);
        std::vector<double> t(n);
        for (size_t i = 0; i < n; ++i) {
            float x = scores[lo + i];
            e[i] = subtract_max ? std::exp(x - m) : std::exp(std::clamp(x, -kNoMaxClamp, kNoMaxClamp));
            t[i] = e[i];
        }
        s.m = m;
        s.z = reduce_terms(t, p.attention_reduction, p.acc.width);
        for (size_t j = 0; j < d; ++j) {
            for (size_t i = 0; i < n; ++i) t[i] = product_term(e[i], values[lo + i][j], p.acc.fma);
            s.o[j] = reduce_terms(t, p.attention_reduction, p.acc.width);
        }
        return s;
    }

    AttnState range(size_t lo, size_t hi) const {
        switch (p.attention_softmax) {
            case SoftmaxVariant::StreamingOnePass: return streaming(lo, hi);
            case SoftmaxVariant::TwoPassMaxSubtract: return explicit_exp(lo, hi, true);
            case SoftmaxVariant::NoMaxSubtract: return explicit_exp(lo, hi, false);
        }
        return fresh();
    }
};

AttnState to_fp32(AttnState s) {
    s.z = static_cast<float>(s.z);
    for (double& x : s.o) x = static_cast<float>(x);
    return s;
}

}  // namespace

std::vector<float> attend(std::span<const float> q, const std::vector<std::vector<float>>& keys,
                          const std::vector<std::vector<float>>& values, const KernelProfile& p,
                          std::optional<int> chunk_size) {
    const size_t n = keys.size();
    if (n == 0 || values.size() != n) throw Error("attention over empty or ragged cache");
    const size_t d = values[0].size();
    const float scale = 1.0f / std::sqrt(static_cast<float>(q.size()));
    std::vector<float> scores(n);
    for (size_t i = 0; i < n; ++i) scores[i] = dot(q, keys[i], p.attention_reduction, p.acc) * scale;

    Attn a{scores, values, p, d};
    AttnState st;
    if (chunk_size && n > static_cast<size_t>(*chunk_size)) {
        // Chunk partials are written out as fp32 and merged sequentially, the
        // way a chunked prefill carries state between passes.
        const size_t c = static_cast<size_t>(*chunk_size);
        st = a.fresh();
        for (size_t lo = 0; lo < n; lo += c) st = a.merge(st, to_fp32(a.range(lo, std::min(n, lo + c))));
    } else {
        st = a.range(0, n);
    }
    const float z = static_cast<float>(st.z);
    std::vector<float> h(d);
    for (size_t j = 0; j < d; ++j) h[j] = static_cast<float>(st.o[j]) / z;
    return h;
}

CacheState build_cache(const ExecContext& ctx, std::span<const int> tokens, size_t reuse_prefix) {
    if (tokens.empty()) throw Error("empty prompt");
    const int V = ctx.model->vocab_size;
    for (int t : tokens)
        if (t < 0 || t >= V) throw Error("token out of range: " + std::to_string(t));
    const size_t n = tokens.size();
    const bool reuse = ctx.policy.cache_policy == CachePolicy::PrefixReuse && ctx.warm;
    if (!reuse) reuse_prefix = 0;
    reuse_prefix = std::min(reuse_prefix, n - 1);
    const bool chunked = ctx.policy.chunk_size && n > static_cast<size_t>(*ctx.policy.chunk_size);

    CacheState c;
    c.tokens.assign(tokens.begin(), tokens.end());
    c.keys.reserve(n);
    c.values.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        const Projector& pr = i < reuse_prefix ? *ctx.warm : *ctx.proj;
        auto k = pr.k(tokens[i]);
        auto v = pr.v(tokens[i]);
        c.keys.emplace_back(k.begin(), k.end());
        c.values.emplace_back(v.begin(), v.end());
        CacheTag tag;
        if (i < reuse_prefix) {
            tag.kind = Provenance::Reused;
        } else if (chunked) {
            tag.kind = Provenance::ChunkedPrefill;
            tag.chunk_index = static_cast<int>(i / static_cast<size_t>(*ctx.policy.chunk_size));
        }
        c.provenance.push_back(tag);
    }
    return c;
}

PrefillResult prefill(const ExecContext& ctx, std::span<const int> tokens, size_t reuse_prefix) {
    PrefillResult r;
    r.cache = build_cache(ctx, tokens, reuse_prefix);
    auto h = attend(ctx.proj->q(tokens.back()), r.cache.keys, r.cache.values, ctx.profile,
                    ctx.policy.chunk_size);
    r.logits = ctx.proj->readout(h);
    return r;
}

PrefillResult prefill(const ModelWeights& m, std::span<const int> tokens, const KernelProfile& p,
                      const ExecPolicy& pol) {
    return prefill(ExecContext::make(m, p, pol), tokens);
}

std::vector<float> decode_logits(const ExecContext& ctx, const CacheState& cache) {
    if (cache.size() == 0) throw Error("decode on empty cache");
    auto h = attend(ctx.proj->q(cache.tokens.back()), cache.keys, cache.values, ctx.profile, std::nullopt);
    return ctx.proj->readout(h);
}

void append_token(const ExecContext& ctx, CacheState& cache, int token) {
    if (token < 0 || token >= ctx.model->vocab_size) throw Error("token out of range");
    auto k = ctx.proj->k(token);
    auto v = ctx.proj->v(token);
    cache.tokens.push_back(token);
    cache.keys.emplace_back(k.begin(), k.end());
    cache.values.emplace_back(v.begin(), v.end());
    cache.provenance.push_back({Provenance::Decoded, 0});
}

int sample(std::span<const float> logits, const SamplerState& s) {
    if (logits.empty()) throw Error("empty logits");
    std::vector<float> l(logits.begin(), logits.end());
    if (s.noise_sigma > 0.0) {
        CounterRng rng(s.seed ^ 0x4E4F495345ull, s.request_id, s.step);
        for (float& x : l) x = static_cast<float>(x + s.noise_sigma * rng.normal());
    }
    if (s.temperature <= 0.0) {
        size_t best = 0;
        for (size_t i = 1; i < l.size(); ++i)
            if (l[i] > l[best]) best = i;
        return static_cast<int>(best);
    }
    const double m = *std::max_element(l.begin(), l.end());
    // Weights below e^-60 are skipped: against the max weight 1.0 they are
    // below half an ulp, so the total and the draw are unchanged.
    std::vector<double> w(l.size(), 0.0);
    double total = 0.0;
    for (size_t i = 0; i < l.size(); ++i) {
        const double z = (static_cast<double>(l[i]) - m) / s.temperature;
        if (z < -60.0) continue;
        w[i] = std::exp(z);
        total += w[i];
    }
    const double u = to_unit(mix4(s.seed, s.request_id, s.step, 0x53414D50ull)) * total;
    double cum = 0.0;
    size_t last = 0;
    for (size_t i = 0; i < w.size(); ++i) {
        if (w[i] <= 0.0) continue;
        cum += w[i];
        last = i;
        if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(last);
}

int decode_step(const ExecContext& ctx, CacheState& cache, SamplerState& s) {
    auto logits = decode_logits(ctx, cache);
    int t = sample(logits, s);
    ++s.step;
    append_token(ctx, cache, t);
    return t;
}

int decode_step(const ModelWeights& m, CacheState& cache, const KernelProfile& p, SamplerState& s) {
    return decode_step(ExecContext::make(m, p, ExecPolicy{}), cache, s);
}

std::vector<int> generate(const ExecContext& ctx, std::span<const int> prompt, SamplerState s,
                          int max_len, size_t reuse_prefix) {
    if (max_len < 1) throw Error("max_len must be >= 1");
    PrefillResult pf = prefill(ctx, prompt, reuse_prefix);
    std::vector<int> out;
    int t = sample(pf.logits, s);
    ++s.step;
    out.push_back(t);
    CacheState& c = pf.cache;
    while (t != tok::kStop && static_cast<int>(out.size()) < max_len) {
        append_token(ctx, c, t);
        t = sample(decode_logits(ctx, c), s);
        ++s.step;
        out.push_back(t);
    }
    return out;
}

std::vector<int> generate(const ModelWeights& m, std::span<const int> prompt,
                          const KernelProfile& p, const ExecPolicy& pol, const SamplerState& s,
                          int max_len) {
    return generate(ExecContext::make(m, p, pol), prompt, s, max_len);
}

}  // namespace devfp
