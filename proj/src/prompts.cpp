#include "devfp/prompts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "devfp/rng.hpp"

namespace devfp {

using nlohmann::json;

std::string to_string(Family f) {
    switch (f) {
        case Family::P1: return "P1";
        case Family::P2: return "P2";
        case Family::P3: return "P3";
        case Family::P4: return "P4";
    }
    return "?";
}

Family parse_family(const std::string& s) {
    if (s == "P1") return Family::P1;
    if (s == "P2") return Family::P2;
    if (s == "P3") return Family::P3;
    if (s == "P4") return Family::P4;
    throw Error("unknown prompt family: " + s);
}

namespace {

// Exact-arithmetic view of the model used to steer prompts towards ties.
// With the last token fixed, the attention numerator of logit(a) - logit(c)
// is a sum of per-token terms w(x) * (L[a][x] - L[c][x]) over the context,
// so balancing it is a counting problem over filler multiplicities.
class TieSearch {
public:
    explicit TieSearch(const ModelWeights& m) : m_(m), V_(m.vocab_size), d_(m.d_model) {
        vo_.assign(static_cast<size_t>(V_) * d_, 0.0);
        ko_.assign(static_cast<size_t>(V_) * d_, 0.0);
        for (int t = 0; t < V_; ++t)
            for (int i = 0; i < d_; ++i) {
                double v = 0.0, k = 0.0;
                for (int j = 0; j < d_; ++j) {
                    double x = m.embed.at(t, j);
                    v += static_cast<double>(m.w_v.at(i, j)) * x;
                    k += static_cast<double>(m.w_k.at(i, j)) * x;
                }
                vo_[static_cast<size_t>(t) * d_ + i] = v;
                ko_[static_cast<size_t>(t) * d_ + i] = k;
            }
        L_.assign(static_cast<size_t>(V_) * V_, 0.0);
        for (int a = 0; a < V_; ++a)
            for (int x = 0; x < V_; ++x) {
                double s = 0.0;
                for (int j = 0; j < d_; ++j)
                    s += static_cast<double>(m.embed.at(a, j)) * vo_[static_cast<size_t>(x) * d_ + j];
                L_[static_cast<size_t>(a) * V_ + x] = s;
            }
    }

    // exp(score - max) of every token against the query of `last`.
    std::vector<double> weights(int last) const {
        std::vector<double> q(d_, 0.0);
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) q[i] += static_cast<double>(m_.w_q.at(i, j)) * m_.embed.at(last, j);
        const double scale = 1.0 / std::sqrt(static_cast<double>(d_));
        std::vector<double> s(V_);
        for (int t = 0; t < V_; ++t) {
            double acc = 0.0;
            for (int j = 0; j < d_; ++j) acc += q[j] * ko_[static_cast<size_t>(t) * d_ + j];
            s[t] = acc * scale;
        }
        double mx = *std::max_element(s.begin(), s.end());
        for (double& x : s) x = std::exp(x - mx);
        return s;
    }

    double L(int a, int x) const { return L_[static_cast<size_t>(a) * V_ + x]; }

    std::vector<double> logits(const std::vector<int>& counts, const std::vector<double>& w) const {
        std::vector<double> out(V_, 0.0);
        double z = 0.0;
        for (int x = 0; x < V_; ++x) {
            if (!counts[x]) continue;
            double m = counts[x] * w[x];
            z += m;
            for (int a = 0; a < V_; ++a) out[a] += m * L(a, x);
        }
        for (double& v : out) v /= z;
        return out;
    }

    // Adjust the filler multiplicities (summing to n) so that the numerator of
    // logit(a) - logit(c) is as close to zero as the search can get.
    std::optional<std::vector<int>> balance(const std::vector<double>& w, int a, int c,
                                            const std::vector<int>& fixed, int n,
                                            const std::vector<int>& pool, CounterRng& rng) const {
        const size_t P = pool.size();
        std::vector<double> u(P);
        for (size_t i = 0; i < P; ++i) u[i] = w[pool[i]] * (L(a, pool[i]) - L(c, pool[i]));
        double nf = 0.0;
        for (int x : fixed) nf += w[x] * (L(a, x) - L(c, x));
        const double umin = *std::min_element(u.begin(), u.end());
        const double umax = *std::max_element(u.begin(), u.end());
        if (nf + n * umin > 0.0 || nf + n * umax < 0.0) return std::nullopt;

        std::vector<int> cnt(P, 0);
        for (int k = 0; k < n; ++k) ++cnt[rng.below(P)];
        auto total = [&] {
            double s = nf;
            for (size_t i = 0; i < P; ++i) s += cnt[i] * u[i];
            return s;
        };
        double N = total();
        for (int it = 0; it < 20 * n + 100; ++it) {
            double best = std::fabs(N);
            size_t bi = P, bj = P;
            for (size_t i = 0; i < P; ++i) {
                if (!cnt[i]) continue;
                for (size_t j = 0; j < P; ++j) {
                    if (i == j) continue;
                    double r = std::fabs(N + u[j] - u[i]);
                    if (r < best) best = r, bi = i, bj = j;
                }
            }
            if (bi == P) break;
            --cnt[bi];
            ++cnt[bj];
            N = total();
        }

        // Meet in the middle over pairs of swaps: four swaps in total.
        struct Move { size_t from, to; double d; };
        std::vector<Move> moves;
        for (size_t i = 0; i < P; ++i)
            if (cnt[i] >= 2)
                for (size_t j = 0; j < P; ++j)
                    if (i != j) moves.push_back({i, j, u[j] - u[i]});
        if (moves.empty()) return cnt;
        struct PairSum { double d; uint32_t x, y; };
        std::vector<PairSum> ps;
        ps.reserve(moves.size() * (moves.size() + 1) / 2 + 1);
        ps.push_back({0.0, UINT32_MAX, UINT32_MAX});
        for (uint32_t x = 0; x < moves.size(); ++x) {
            ps.push_back({moves[x].d, x, UINT32_MAX});
            for (uint32_t y = x; y < moves.size(); ++y) ps.push_back({moves[x].d + moves[y].d, x, y});
        }
        std::vector<PairSum> sorted = ps;
        std::sort(sorted.begin(), sorted.end(), [](const PairSum& p, const PairSum& q) {
            if (p.d != q.d) return p.d < q.d;
            if (p.x != q.x) return p.x < q.x;
            return p.y < q.y;
        });
        auto apply = [&](std::vector<int>& k, const PairSum& p) {
            for (uint32_t m : {p.x, p.y})
                if (m != UINT32_MAX) --k[moves[m].from], ++k[moves[m].to];
        };
        double best = std::fabs(N);
        std::vector<int> best_cnt = cnt;
        for (const PairSum& p : ps) {
            const double want = -(N + p.d);
            auto it = std::lower_bound(sorted.begin(), sorted.end(), want,
                                       [](const PairSum& s, double v) { return s.d < v; });
            for (auto jt : {it, it == sorted.begin() ? it : it - 1}) {
                if (jt == sorted.end()) continue;
                double r = std::fabs(N + p.d + jt->d);
                if (r >= best) continue;
                std::vector<int> k = cnt;
                apply(k, p);
                apply(k, *jt);
                if (std::any_of(k.begin(), k.end(), [](int v) { return v < 0; })) continue;
                best = r;
                best_cnt = std::move(k);
            }
        }
        return best_cnt;
    }

private:
    const ModelWeights& m_;
    int V_, d_;
    std::vector<double> vo_, ko_, L_;
};

const std::vector<int>& filler_pool() {
    static const std::vector<int> pool = [] {
        std::vector<int> p;
        for (int t = tok::kFillerBegin; t < tok::kWordBegin; ++t) p.push_back(t);
        return p;
    }();
    return pool;
}

template <typename T>
void shuffle(std::vector<T>& v, CounterRng& rng) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

std::string make_id(Family f, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%05d", f == Family::P1 ? "p1" : f == Family::P2 ? "p2"
                                              : f == Family::P3 ? "p3" : "p4", i);
    return buf;
}

// One family-specific candidate layout: fixed tokens, and where they sit among fillers.
struct Layout {
    int a = -1;  // token that must win (or tie at the top)
    std::vector<int> rivals;
    std::vector<std::vector<int>> blocks;  // placed as contiguous runs among the fillers
    int n_free = 0;
    int cue = -1;
    bool a_must_win = false;
};

struct Checked {
    std::vector<int> tokens;
    int rival;
};

// Orders a balanced multiset and checks it on the reference system.
std::optional<Checked> realize(const Layout& lay, int c, const std::vector<int>& cnt,
                               const SimulatedSystem& ref, const GenOptions& o, CounterRng& rng) {
    const auto& pool = filler_pool();
    std::vector<int> fill;
    for (size_t i = 0; i < cnt.size(); ++i) fill.insert(fill.end(), cnt[i], pool[i]);
    const ExecContext& ctx = ref.context(o.batch_size);
    for (int perm = 0; perm < o.permutations; ++perm) {
        shuffle(fill, rng);
        // Insert each block at a random slot boundary.
        std::vector<size_t> slots;
        for (size_t b = 0; b < lay.blocks.size(); ++b) slots.push_back(rng.below(fill.size() + 1));
        std::vector<size_t> order(lay.blocks.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](size_t x, size_t y) { return slots[x] < slots[y]; });
        std::vector<int> toks;
        size_t next = 0;
        for (size_t i = 0; i <= fill.size(); ++i) {
            while (next < order.size() && slots[order[next]] == i) {
                const auto& blk = lay.blocks[order[next]];
                toks.insert(toks.end(), blk.begin(), blk.end());
                ++next;
            }
            if (i < fill.size()) toks.push_back(fill[i]);
        }
        toks.push_back(lay.cue);
        auto lg = prefill(ctx, toks).logits;
        std::vector<int> idx(lg.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::partial_sort(idx.begin(), idx.begin() + 3, idx.end(), [&](int x, int y) {
            return lg[x] > lg[y] || (lg[x] == lg[y] && x < y);
        });
        const int top = idx[0], second = idx[1];
        if (!((top == lay.a && second == c) || (top == c && second == lay.a))) continue;
        if (lay.a_must_win && top != lay.a) continue;
        const double tol = std::max(o.delta, o.delta_rel * std::fabs(static_cast<double>(lg[top])));
        if (static_cast<double>(lg[top]) - static_cast<double>(lg[second]) >= tol) continue;
        return Checked{toks, c};
    }
    return std::nullopt;
}

const TieSearch& tie_search(const ModelWeights& m) {
    static std::mutex mu;
    static std::map<const ModelWeights*, std::unique_ptr<TieSearch>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& p = cache[&m];
    if (!p) p = std::make_unique<TieSearch>(m);
    return *p;
}

std::optional<Checked> attempt(const Layout& lay, const SimulatedSystem& ref, const GenOptions& o,
                               CounterRng& rng) {
    const TieSearch& ts = tie_search(*ref.model);
    const auto& pool = filler_pool();
    auto w = ts.weights(lay.cue);
    std::vector<int> fixed;
    for (const auto& b : lay.blocks) fixed.insert(fixed.end(), b.begin(), b.end());
    fixed.push_back(lay.cue);
    for (int c : lay.rivals) {
        auto cnt = ts.balance(w, lay.a, c, fixed, lay.n_free, pool, rng);
        if (!cnt) continue;
        // The pair must stand clear of every other token in exact arithmetic.
        std::vector<int> all(ref.model->vocab_size, 0);
        for (int x : fixed) ++all[x];
        for (size_t i = 0; i < pool.size(); ++i) all[pool[i]] += (*cnt)[i];
        auto lg = ts.logits(all, w);
        double third = -1e300;
        for (int t = 0; t < ref.model->vocab_size; ++t)
            if (t != lay.a && t != c) third = std::max(third, lg[t]);
        const double top = std::max(lg[lay.a], lg[c]);
        if (top - third < 1e-4 * std::fabs(top)) continue;
        if (auto ok = realize(lay, c, *cnt, ref, o, rng)) return ok;
    }
    return std::nullopt;
}

// Rivals: strongest other tokens in exact arithmetic for a random fill.
std::vector<int> rank_rivals(const Layout& lay, const ModelWeights& m, CounterRng& rng,
                             int max_rivals, bool must_exceed_a) {
    const TieSearch& ts = tie_search(m);
    auto w = ts.weights(lay.cue);
    std::vector<int> all(m.vocab_size, 0);
    for (const auto& b : lay.blocks)
        for (int x : b) ++all[x];
    ++all[lay.cue];
    const auto& pool = filler_pool();
    for (int k = 0; k < lay.n_free; ++k) ++all[pool[rng.below(pool.size())]];
    auto lg = ts.logits(all, w);
    std::vector<int> idx(m.vocab_size);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int x, int y) { return lg[x] > lg[y] || (lg[x] == lg[y] && x < y); });
    std::vector<int> out;
    for (int t : idx) {
        if (t == lay.a || t == tok::kStop) continue;
        if (must_exceed_a && t < lay.a) continue;
        out.push_back(t);
        if (static_cast<int>(out.size()) >= max_rivals) break;
    }
    return out;
}

void check_count(int count) {
    if (count < 1) throw Error("count must be >= 1");
}

[[noreturn]] void exhausted(Family f, int got, int want) {
    throw Error("insufficient near-tie candidates (" + to_string(f) + ": " + std::to_string(got) +
                " of " + std::to_string(want) + ")");
}

}  // namespace

std::vector<Prompt> gen_p1(int count, uint64_t seed, const SimulatedSystem& ref, const GenOptions& o) {
    check_count(count);
    const ModelWeights& m = *ref.model;
    std::vector<int> rare;
    for (int t = tok::kRareBegin; t < m.vocab_size; ++t) rare.push_back(t);
    if (rare.empty()) throw Error("vocabulary has no rare tokens");
    CounterRng rng(seed, 1, 0);
    shuffle(rare, rng);
    std::vector<Prompt> out;
    const long budget = static_cast<long>(o.budget_factor) * count;
    for (long at = 0; at < budget && static_cast<int>(out.size()) < count; ++at) {
        int r = rare[static_cast<size_t>(at) % rare.size()];
        CounterRng arng(seed, 1, static_cast<uint64_t>(at) + 1);
        Layout lay;
        lay.a = r;
        lay.cue = tok::kCueRare;
        lay.blocks = {{r}};
        lay.n_free = 32 + static_cast<int>(arng.below(65));
        lay.rivals = rank_rivals(lay, m, arng, 6, false);
        auto got = attempt(lay, ref, o, arng);
        if (!got) continue;
        Prompt p;
        p.family = Family::P1;
        p.tokens = got->tokens;
        p.expected.targets = {r};
        p.expected.rival = got->rival;
        p.max_len = 4;
        p.id = make_id(Family::P1, static_cast<int>(out.size()));
        out.push_back(std::move(p));
    }
    if (static_cast<int>(out.size()) < count) exhausted(Family::P1, static_cast<int>(out.size()), count);
    return out;
}

std::vector<Prompt> gen_p2(int count, uint64_t seed, const SimulatedSystem& ref, const GenOptions& o) {
    check_count(count);
    std::vector<Prompt> out;
    const long budget = static_cast<long>(o.budget_factor) * count;
    for (long at = 0; at < budget && static_cast<int>(out.size()) < count; ++at) {
        CounterRng arng(seed, 2, static_cast<uint64_t>(at) + 1);
        Layout lay;
        lay.a = tok::kYes;
        lay.rivals = {tok::kNo};
        lay.cue = tok::kCueAnswer;
        lay.blocks = {{tok::kYes}, {tok::kNo}};
        lay.n_free = 32 + static_cast<int>(arng.below(65));
        auto got = attempt(lay, ref, o, arng);
        if (!got) continue;
        Prompt p;
        p.family = Family::P2;
        p.tokens = got->tokens;
        p.expected.yes_token = tok::kYes;
        p.expected.no_token = tok::kNo;
        p.expected.rival = tok::kNo;
        p.max_len = 1;
        p.id = make_id(Family::P2, static_cast<int>(out.size()));
        out.push_back(std::move(p));
    }
    if (static_cast<int>(out.size()) < count) exhausted(Family::P2, static_cast<int>(out.size()), count);
    return out;
}

std::vector<Prompt> gen_p3(int count, uint64_t seed, const SimulatedSystem& ref, const GenOptions& o) {
    check_count(count);
    std::vector<Prompt> out;
    const long budget = static_cast<long>(o.budget_factor) * count;
    for (long at = 0; at < budget && static_cast<int>(out.size()) < count; ++at) {
        CounterRng arng(seed, 3, static_cast<uint64_t>(at) + 1);
        // Identifier digit a, decoy digit c > a so that an exact tie resolves to a.
        int a = static_cast<int>(arng.below(9));
        int c = a + 1 + static_cast<int>(arng.below(static_cast<uint64_t>(9 - a)));
        const int da = tok::digit(a), dc = tok::digit(c);
        const int len = o.p3_min_len + static_cast<int>(arng.below(static_cast<uint64_t>(o.p3_max_len - o.p3_min_len + 1)));
        Layout lay;
        lay.a = da;
        lay.rivals = {dc};
        lay.cue = tok::kCueNumber;
        lay.blocks = {{tok::kNumMark, da, da, da}, {dc, dc, dc}};
        lay.n_free = len - 8;
        lay.a_must_win = true;
        auto got = attempt(lay, ref, o, arng);
        if (!got) continue;
        Prompt p;
        p.family = Family::P3;
        p.tokens = got->tokens;
        p.expected.targets = {da, da, da};
        p.expected.rival = dc;
        p.max_len = 3;
        p.id = make_id(Family::P3, static_cast<int>(out.size()));
        out.push_back(std::move(p));
    }
    if (static_cast<int>(out.size()) < count) exhausted(Family::P3, static_cast<int>(out.size()), count);
    return out;
}

std::vector<Prompt> gen_p4(int count, uint64_t seed, const SimulatedSystem* ref, const GenOptions& o) {
    check_count(count);
    const int R = o.repeat_count;
    if (R < 1) throw Error("repeat count must be >= 1");
    // Shared instruction prefix, identical for every P4 prompt of the suite.
    CounterRng prng(seed, 4, 0);
    std::vector<int> prefix;
    for (int i = 0; i < 16; ++i) prefix.push_back(tok::kFillerBegin + static_cast<int>(prng.below(tok::kNumFillers)));
    std::vector<int> rdigits;
    for (char ch : std::to_string(R)) rdigits.push_back(tok::digit(ch - '0'));

    std::vector<Prompt> out;
    const long budget = static_cast<long>(o.budget_factor) * count;
    for (long at = 0; at < budget && static_cast<int>(out.size()) < count; ++at) {
        CounterRng arng(seed, 4, static_cast<uint64_t>(at) + 1);
        const int w = tok::kWordBegin + static_cast<int>(arng.below(tok::kNumWords));
        Prompt p;
        p.family = Family::P4;
        p.tokens = prefix;
        const int extra = 2 + static_cast<int>(arng.below(11));
        for (int i = 0; i < extra; ++i)
            p.tokens.push_back(tok::kFillerBegin + static_cast<int>(arng.below(tok::kNumFillers)));
        p.tokens.push_back(tok::kCueRepeat);
        p.tokens.insert(p.tokens.end(), rdigits.begin(), rdigits.end());
        p.tokens.push_back(w);
        p.expected.repeat_count = R;
        p.expected.pattern = {w};
        p.max_len = 2 * R;
        p.shared_prefix = prefix.size();
        p.id = make_id(Family::P4, static_cast<int>(out.size()));
        if (ref) {
            Response r = query(*ref, p, 0.0, 0, o.batch_size);
            int n = count_occurrences(r.tokens, p.expected.pattern);
            if (r.tokens.back() != tok::kStop || n < 1 || n > R) continue;
        }
        out.push_back(std::move(p));
    }
    if (static_cast<int>(out.size()) < count) exhausted(Family::P4, static_cast<int>(out.size()), count);
    return out;
}

std::vector<int> PromptSuite::family_counts() const {
    std::vector<int> c(4, 0);
    for (const auto& p : prompts) ++c[static_cast<int>(p.family)];
    return c;
}

PromptSuite PromptSuite::subset(const std::vector<size_t>& idx) const {
    PromptSuite s;
    s.seed = seed;
    s.reference = reference;
    for (size_t i : idx) s.prompts.push_back(prompts.at(i));
    return s;
}

SystemConfig default_reference() { return valid_configs().front(); }

PromptSuite gen_suite(const SuiteCounts& counts, uint64_t seed, const SimulatedSystem& ref,
                      const GenOptions& o) {
    PromptSuite s;
    s.seed = seed;
    s.reference = ref.config.id();
    auto add = [&](std::vector<Prompt> v) {
        for (auto& p : v) s.prompts.push_back(std::move(p));
    };
    if (counts.p1 > 0) add(gen_p1(counts.p1, seed, ref, o));
    if (counts.p2 > 0) add(gen_p2(counts.p2, seed, ref, o));
    if (counts.p3 > 0) add(gen_p3(counts.p3, seed, ref, o));
    if (counts.p4 > 0) add(gen_p4(counts.p4, seed, &ref, o));
    return s;
}

int count_occurrences(const std::vector<int>& seq, const std::vector<int>& pattern) {
    if (pattern.empty()) return 0;
    int n = 0;
    for (size_t i = 0; i + pattern.size() <= seq.size();) {
        if (std::equal(pattern.begin(), pattern.end(), seq.begin() + static_cast<long>(i))) {
            ++n;
            i += pattern.size();
        } else {
            ++i;
        }
    }
    return n;
}

double score(const Prompt& p, const Response& r) { return score(p, r.tokens); }

double score(const Prompt& p, const std::vector<int>& t) {
    switch (p.family) {
        case Family::P1:
        case Family::P3:
            if (p.expected.targets.empty()) throw Error("prompt has no expected tokens");
            return std::search(t.begin(), t.end(), p.expected.targets.begin(), p.expected.targets.end()) != t.end()
                       ? 1.0
                       : 0.0;
        case Family::P2:
            return !t.empty() && t.front() == p.expected.yes_token ? 1.0 : 0.0;
        case Family::P4: {
            if (p.expected.repeat_count < 1) throw Error("P4 prompt without repeat count");
            double v = static_cast<double>(count_occurrences(t, p.expected.pattern)) / p.expected.repeat_count;
            return std::clamp(v, 0.0, 1.0);
        }
    }
    throw Error("family mismatch");
}

std::string to_jsonl_line(const Prompt& p) {
    json e = {{"targets", p.expected.targets}, {"rival", p.expected.rival}};
    if (p.family == Family::P2) {
        e["yes_token"] = p.expected.yes_token;
        e["no_token"] = p.expected.no_token;
    }
    if (p.family == Family::P4) {
        e["repeat_count"] = p.expected.repeat_count;
        e["pattern"] = p.expected.pattern;
    }
    json j = {{"id", p.id},
              {"family", to_string(p.family)},
              {"tokens", p.tokens},
              {"expected", e},
              {"max_len", p.max_len},
              {"shared_prefix", p.shared_prefix}};
    return j.dump();
}

Prompt prompt_from_json_line(const std::string& line) {
    try {
        json j = json::parse(line);
        Prompt p;
        p.id = j.at("id").get<std::string>();
        p.family = parse_family(j.at("family").get<std::string>());
        p.tokens = j.at("tokens").get<std::vector<int>>();
        const json& e = j.at("expected");
        p.expected.targets = e.value("targets", std::vector<int>{});
        p.expected.rival = e.value("rival", -1);
        p.expected.yes_token = e.value("yes_token", -1);
        p.expected.no_token = e.value("no_token", -1);
        p.expected.repeat_count = e.value("repeat_count", 0);
        p.expected.pattern = e.value("pattern", std::vector<int>{});
        p.max_len = j.value("max_len", 1);
        p.shared_prefix = j.value("shared_prefix", size_t{0});
        return p;
    } catch (const json::exception& e) {
        throw Error(std::string("bad prompt line: ") + e.what());
    }
}

void save_jsonl(const PromptSuite& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    for (const auto& p : s.prompts) out << to_jsonl_line(p) << '\n';
}

PromptSuite load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    PromptSuite s;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) s.prompts.push_back(prompt_from_json_line(line));
    return s;
}

}  // namespace devfp
