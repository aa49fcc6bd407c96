#pragma once

// Independent reference implementations used as test oracles. These are
// deliberately written with plain loops over std::vector<double> so they
// share no code with the library's tensor path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

namespace oracle {

constexpr double kProbFloor = 1e-8;

inline double clampp(double p) { return std::min(std::max(p, kProbFloor), 1.0); }

// softmax over the last axis of a [rows, C] buffer
inline std::vector<double> softmax_rows(const std::vector<double>& logits, int C) {
    std::vector<double> out(logits.size());
    const std::size_t rows = logits.size() / static_cast<std::size_t>(C);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = &logits[r * C];
        double m = x[0];
        for (int c = 1; c < C; ++c) m = std::max(m, x[c]);
        double s = 0.0;
        for (int c = 0; c < C; ++c) s += std::exp(x[c] - m);
        for (int c = 0; c < C; ++c) out[r * C + c] = std::exp(x[c] - m) / s;
    }
    return out;
}

inline double kl_pixel(const double* p, const double* q, int C) {
    double d = 0.0;
    for (int c = 0; c < C; ++c) d += p[c] * (std::log(clampp(p[c])) - std::log(clampp(q[c])));
    return std::max(0.0, d);
}

inline double mse_pixel(const double* p, const double* q, int C) {
    double d = 0.0;
    for (int c = 0; c < C; ++c) d += (p[c] - q[c]) * (p[c] - q[c]);
    return d;
}

inline double ce_pixel(const double* p, int label) { return -std::log(clampp(p[label])); }

enum class Dist { kl_forward, kl_reversed, mse };

// Reference rectified loss from primary/aux logits. When `frozen_weights`
// is given (detached mode), the exp(-D) factors come from it instead of the
// perturbed logits; pass nullptr for the full-gradient mode.
inline double rectified_ref(const std::vector<double>& logits_p, const std::vector<double>& logits_a,
                            const std::vector<std::uint8_t>& labels, const std::vector<std::uint8_t>& valid,
                            int C, Dist dist, const std::vector<double>* frozen_weights,
                            double aux_ce_weight = 0.0) {
    const auto P = softmax_rows(logits_p, C);
    const auto A = softmax_rows(logits_a, C);
    const std::size_t n = labels.size();
    std::int64_t nvalid = 0;
    for (auto v : valid) nvalid += v ? 1 : 0;
    double acc = 0.0, aux_acc = 0.0;
    for (std::size_t px = 0; px < n; ++px) {
        if (!valid[px]) continue;
        const double* p = &P[px * C];
        const double* a = &A[px * C];
        double d = 0.0;
        switch (dist) {
            case Dist::kl_forward: d = kl_pixel(p, a, C); break;
            case Dist::kl_reversed: d = kl_pixel(a, p, C); break;
            case Dist::mse: d = mse_pixel(p, a, C); break;
        }
        const double w = frozen_weights ? (*frozen_weights)[px] : std::exp(-d);
        acc += w * ce_pixel(p, labels[px]) + d;
        if (aux_ce_weight > 0.0) aux_acc += ce_pixel(a, labels[px]);
    }
    return acc / static_cast<double>(nvalid) + aux_ce_weight * aux_acc / static_cast<double>(nvalid);
}

// per-pixel exp(-D) factors for the detached-mode oracle
inline std::vector<double> damping_weights(const std::vector<double>& logits_p,
                                           const std::vector<double>& logits_a,
                                           const std::vector<std::uint8_t>& valid, int C, Dist dist) {
    const auto P = softmax_rows(logits_p, C);
    const auto A = softmax_rows(logits_a, C);
    std::vector<double> w(valid.size(), 0.0);
    for (std::size_t px = 0; px < valid.size(); ++px) {
        const double* p = &P[px * C];
        const double* a = &A[px * C];
        double d = 0.0;
        switch (dist) {
            case Dist::kl_forward: d = kl_pixel(p, a, C); break;
            case Dist::kl_reversed: d = kl_pixel(a, p, C); break;
            case Dist::mse: d = mse_pixel(p, a, C); break;
        }
        w[px] = std::exp(-d);
    }
    return w;
}

inline double cross_entropy_ref(const std::vector<double>& logits_p, const std::vector<std::uint8_t>& labels,
                                const std::vector<std::uint8_t>& valid, int C) {
    const auto P = softmax_rows(logits_p, C);
    double acc = 0.0;
    std::int64_t nvalid = 0;
    for (std::size_t px = 0; px < labels.size(); ++px) {
        if (!valid[px]) continue;
        ++nvalid;
        acc += ce_pixel(&P[px * C], labels[px]);
    }
    return acc / static_cast<double>(nvalid);
}

// set-based IoU: per class, intersection and union of pixel index sets
inline std::vector<double> iou_sets(const std::vector<std::uint8_t>& pred,
                                    const std::vector<std::uint8_t>& gt,
                                    const std::vector<std::uint8_t>& mask, int classes) {
    std::vector<double> out(static_cast<std::size_t>(classes), -1.0);
    for (int c = 0; c < classes; ++c) {
        std::set<std::size_t> ps, gs;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (!mask[i]) continue;
            if (pred[i] == c) ps.insert(i);
            if (gt[i] == c) gs.insert(i);
        }
        std::set<std::size_t> uni = ps;
        uni.insert(gs.begin(), gs.end());
        if (uni.empty()) continue;
        std::size_t inter = 0;
        for (auto i : ps) inter += gs.count(i);
        out[static_cast<std::size_t>(c)] = static_cast<double>(inter) / static_cast<double>(uni.size());
    }
    return out;
}

} // namespace oracle
