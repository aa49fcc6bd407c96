#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rectseg/model.hpp"
#include "rectseg/pseudo.hpp"

namespace rectseg {

// probabilities are clamped to [kProbFloor, 1] before any log
constexpr double kProbFloor = 1e-8;

enum class VarianceKind { kl_forward, kl_reversed, mse, naive, true_label, mc_dropout };

std::string variance_kind_name(VarianceKind k);

// Per-pixel nonnegative uncertainty field. `defined` marks pixels that have
// a value (naive variance is unset wherever the pseudo label is invalid).
struct VarianceMap {
    int h = 0, w = 0;
    VarianceKind kind = VarianceKind::kl_forward;
    std::vector<double> values;
    std::vector<std::uint8_t> defined;
};

struct CertaintyMap {
    int h = 0, w = 0;
    std::vector<double> values; // exp(-variance), in (0,1]
    std::vector<std::uint8_t> defined;
};

enum class KlDirection { forward, reversed };

// forward: per pixel sum_c P log(P/P_aux); reversed swaps the roles
VarianceMap kl_variance(const ProbMap& primary, const ProbMap& aux, KlDirection direction);

// per pixel sum_c (P_c - P_aux,c)^2
VarianceMap mse_variance(const ProbMap& primary, const ProbMap& aux);

// per pixel sum_c (P_c - onehot(pseudo)_c)^2; unset where the label is invalid
VarianceMap naive_variance(const ProbMap& primary, const std::vector<std::uint8_t>& pseudo_labels,
                           const std::vector<std::uint8_t>& valid);

// per pixel sum_c (P_c - onehot(gt)_c)^2; the oracle usable on synthetic data
VarianceMap true_variance(const ProbMap& primary, const std::vector<std::uint8_t>& gt_labels);

// mean over `samples` dropout-active passes t of sum_c P log(P / P_drop_t),
// with P the deterministic primary prediction
VarianceMap mc_dropout_variance(const TwoHeadSegNet& net, const LabeledImage& img, double rate, int samples,
                                Rng& rng);

CertaintyMap certainty(const VarianceMap& vm);

struct UncertaintyGapReport {
    std::optional<double> right_certainty;
    std::optional<double> wrong_certainty;
    std::optional<double> gap; // right - wrong; unset if either side is empty
    std::int64_t right_count = 0;
    std::int64_t wrong_count = 0;
};

// Mean certainty over correctly vs wrongly predicted pixels. When
// confidence_floor is set, only pixels whose confidence exceeds it enter;
// `confidence` must then be provided (per-pixel max probability).
UncertaintyGapReport uncertainty_gap(const CertaintyMap& cm, const LabelMap& pred, const LabelMap& gt,
                                     std::optional<double> confidence_floor = std::nullopt,
                                     const std::vector<double>* confidence = nullptr);

// 16-bit PGM plus a sidecar "<path>.range.txt" recording min/max for
// de-quantization.
void export_heatmap(const std::string& path, const std::vector<double>& values, int h, int w);

} // namespace rectseg
