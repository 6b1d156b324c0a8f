#include "devfp/fpnum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace devfp {

ReductionStrategy ReductionStrategy::blocked(int tile) {
    if (tile < 2) throw Error("blocked reduction needs tile_size >= 2");
    return {ReduceKind::Blocked, tile};
}

std::string ReductionStrategy::name() const {
    switch (kind) {
        case ReduceKind::Sequential: return "sequential";
        case ReduceKind::Reversed: return "reversed";
        case ReduceKind::Pairwise: return "pairwise";
        case ReduceKind::Kahan: return "kahan";
        case ReduceKind::Blocked: return "blocked:" + std::to_string(tile);
    }
    return "?";
}

ReductionStrategy ReductionStrategy::parse(const std::string& s) {
    if (s == "sequential") return sequential();
    if (s == "reversed") return reversed();
    if (s == "pairwise") return pairwise();
    if (s == "kahan") return kahan();
    if (s.rfind("blocked:", 0) == 0) {
        int t = 0;
        try {
            t = std::stoi(s.substr(8));
        } catch (const std::exception&) {
            throw Error("bad reduction strategy: " + s);
        }
        return blocked(t);
    }
    throw Error("bad reduction strategy: " + s);
}

std::string AccumulatorSpec::name() const {
    std::string n = width == AccWidth::Bits32 ? "fp32" : "fp64";
    return fma ? n + "+fma" : n;
}

bool is_redundant(const ReductionStrategy& s, const AccumulatorSpec& acc) {
    return s.kind == ReduceKind::Kahan && acc.width == AccWidth::Bits64;
}

std::string to_string(SoftmaxVariant v) {
    switch (v) {
        case SoftmaxVariant::TwoPassMaxSubtract: return "two_pass";
        case SoftmaxVariant::StreamingOnePass: return "streaming";
        case SoftmaxVariant::NoMaxSubtract: return "no_max";
    }
    return "?";
}

SoftmaxVariant parse_softmax(const std::string& s) {
    if (s == "two_pass") return SoftmaxVariant::TwoPassMaxSubtract;
    if (s == "streaming") return SoftmaxVariant::StreamingOnePass;
    if (s == "no_max") return SoftmaxVariant::NoMaxSubtract;
    throw Error("bad softmax variant: " + s);
}

namespace {

double seq_sum(const double* t, size_t n, AccWidth w) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s = round_to(s + t[i], w);
    return s;
}

double pair_sum(const double* t, size_t n, AccWidth w) {
    if (n <= 2) return seq_sum(t, n, w);
    size_t h = n / 2;
    return round_to(pair_sum(t, h, w) + pair_sum(t + h, n - h, w), w);
}

double reduce_impl(std::span<const double> t, const ReductionStrategy& st, AccWidth w) {
    const size_t n = t.size();
    switch (st.kind) {
        case ReduceKind::Sequential: return seq_sum(t.data(), n, w);
        case ReduceKind::Reversed: {
            double s = 0.0;
            for (size_t i = n; i-- > 0;) s = round_to(s + t[i], w);
            return s;
        }
        case ReduceKind::Pairwise: return pair_sum(t.data(), n, w);
        case ReduceKind::Blocked: {
            double total = 0.0;
            const size_t tile = static_cast<size_t>(st.tile);
            for (size_t lo = 0; lo < n; lo += tile) {
                double part = seq_sum(t.data() + lo, std::min(tile, n - lo), w);
                total = round_to(total + part, w);
            }
            return total;
        }
        case ReduceKind::Kahan: {
            double s = 0.0, c = 0.0;
            for (size_t i = 0; i < n; ++i) {
                double y = round_to(t[i] - c, w);
                double tmp = round_to(s + y, w);
                c = round_to(round_to(tmp - s, w) - y, w);
                s = tmp;
            }
            return s;
        }
    }
    return 0.0;
}

struct Online {
    float m = -std::numeric_limits<float>::infinity();
    double s = 0.0;
    double c = 0.0;  // Kahan compensation, rescaled with s
};

void online_push(Online& st, float x, const AccumulatorSpec& acc, bool kahan) {
    if (x > st.m) {
        double scale = std::isinf(st.m) ? 0.0 : static_cast<double>(std::exp(st.m - x));
        if (kahan) st.c = round_to(st.c * scale, acc.width);
        st.s = scale_add(st.s, scale, 1.0, acc);
        st.m = x;
        return;
    }
    double e = static_cast<double>(std::exp(x - st.m));
    if (kahan) {
        double y = round_to(e - st.c, acc.width);
        double tmp = round_to(st.s + y, acc.width);
        st.c = round_to(round_to(tmp - st.s, acc.width) - y, acc.width);
        st.s = tmp;
    } else {
        st.s = round_to(st.s + e, acc.width);
    }
}

Online online_merge(const Online& a, const Online& b, const AccumulatorSpec& acc) {
    if (b.s == 0.0) return a;
    if (a.s == 0.0) return b;
    Online r;
    if (b.m > a.m) {
        r.m = b.m;
        r.s = scale_add(a.s, static_cast<double>(std::exp(a.m - b.m)), b.s, acc);
    } else {
        r.m = a.m;
        r.s = scale_add(b.s, static_cast<double>(std::exp(b.m - a.m)), a.s, acc);
    }
    return r;
}

Online online_seq(std::span<const float> x, const AccumulatorSpec& acc) {
    Online st;
    for (float v : x) online_push(st, v, acc, false);
    return st;
}

Online online_pair(std::span<const float> x, const AccumulatorSpec& acc) {
    if (x.size() <= 2) return online_seq(x, acc);
    size_t h = x.size() / 2;
    return online_merge(online_pair(x.subspan(0, h), acc), online_pair(x.subspan(h), acc), acc);
}

Online online_reduce(std::span<const float> x, const ReductionStrategy& st,
                     const AccumulatorSpec& acc) {
    switch (st.kind) {
        case ReduceKind::Sequential: return online_seq(x, acc);
        case ReduceKind::Reversed: {
            Online s;
            for (size_t i = x.size(); i-- > 0;) online_push(s, x[i], acc, false);
            return s;
        }
        case ReduceKind::Pairwise: return online_pair(x, acc);
        case ReduceKind::Blocked: {
            Online total;
            const size_t tile = static_cast<size_t>(st.tile);
            for (size_t lo = 0; lo < x.size(); lo += tile)
                total = online_merge(total, online_seq(x.subspan(lo, std::min(tile, x.size() - lo)), acc), acc);
            return total;
        }
        case ReduceKind::Kahan: {
            Online s;
            for (float v : x) online_push(s, v, acc, true);
            return s;
        }
    }
    return {};
}

}  // namespace

float reduce_terms(std::span<const double> terms, const ReductionStrategy& strategy,
                   AccWidth width) {
    return static_cast<float>(reduce_impl(terms, strategy, width));
}

float reduce(std::span<const float> values, const ReductionStrategy& strategy,
             const AccumulatorSpec& acc) {
    std::vector<double> t(values.begin(), values.end());
    return reduce_terms(t, strategy, acc.width);
}

float dot(std::span<const float> a, std::span<const float> b, const ReductionStrategy& strategy,
          const AccumulatorSpec& acc) {
    if (a.size() != b.size()) throw Error("dimension mismatch");
    std::vector<double> t(a.size());
    for (size_t i = 0; i < a.size(); ++i) t[i] = product_term(a[i], b[i], acc.fma);
    return reduce_terms(t, strategy, acc.width);
}

std::vector<float> matvec(const Matrix& m, std::span<const float> x,
                          const ReductionStrategy& strategy, const AccumulatorSpec& acc) {
    if (static_cast<size_t>(m.cols) != x.size()) throw Error("dimension mismatch");
    std::vector<float> out(static_cast<size_t>(m.rows));
    for (int r = 0; r < m.rows; ++r) out[r] = dot(m.row(r), x, strategy, acc);
    return out;
}

std::vector<float> softmax(std::span<const float> logits, SoftmaxVariant variant,
                           const ReductionStrategy& strategy, const AccumulatorSpec& acc) {
    if (logits.empty()) throw Error("empty logits");
    for (float v : logits)
        if (!std::isfinite(v)) throw Error("non-finite logit");

    const size_t n = logits.size();
    std::vector<float> p(n);
    if (variant == SoftmaxVariant::StreamingOnePass) {
        Online st = online_reduce(logits, strategy, acc);
        float z = static_cast<float>(st.s);
        for (size_t i = 0; i < n; ++i) p[i] = std::exp(logits[i] - st.m) / z;
        return p;
    }
    std::vector<double> e(n);
    if (variant == SoftmaxVariant::TwoPassMaxSubtract) {
        float m = *std::max_element(logits.begin(), logits.end());
        for (size_t i = 0; i < n; ++i) p[i] = std::exp(logits[i] - m);
    } else {
        for (size_t i = 0; i < n; ++i)
            p[i] = std::exp(std::clamp(logits[i], -kNoMaxClamp, kNoMaxClamp));
    }
    for (size_t i = 0; i < n; ++i) e[i] = p[i];
    float z = reduce_terms(e, strategy, acc.width);
    for (size_t i = 0; i < n; ++i) p[i] = p[i] / z;
    return p;
}

double trace_demo(int n, double a_val, double b_val, const ReductionStrategy& strategy,
                  const AccumulatorSpec& acc) {
    if (n < 1) throw Error("trace_demo needs n >= 1");
    if (acc.width == AccWidth::Bits32) {
        std::vector<double> t(static_cast<size_t>(n) * n,
                              product_term(static_cast<float>(a_val), static_cast<float>(b_val), acc.fma));
        return reduce_terms(t, strategy, acc.width);
    }
    // fp64: every product is a*b rounded once; the sum is kept in double.
    std::vector<double> t(static_cast<size_t>(n) * n, a_val * b_val);
    return reduce_impl(t, strategy, AccWidth::Bits64);
}

double oracle_sum(std::span<const float> values) {
    // Neumaier summation in double.
    double s = 0.0, c = 0.0;
    for (float f : values) {
        double v = f;
        double t = s + v;
        c += std::fabs(s) >= std::fabs(v) ? (s - t) + v : (v - t) + s;
        s = t;
    }
    return s + c;
}

double oracle_dot(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw Error("dimension mismatch");
    double s = 0.0, c = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double v = static_cast<double>(a[i]) * static_cast<double>(b[i]);
        double t = s + v;
        c += std::fabs(s) >= std::fabs(v) ? (s - t) + v : (v - t) + s;
        s = t;
    }
    return s + c;
}

}  // namespace devfp
