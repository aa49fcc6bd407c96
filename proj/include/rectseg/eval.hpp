#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rectseg/model.hpp"
#include "rectseg/pseudo.hpp"
#include "rectseg/synthdata.hpp"

namespace rectseg {

// entry (i,j) counts pixels with ground truth i predicted j; masked pixels
// are excluded
struct ConfusionMatrix {
    int classes = 0;
    std::vector<std::int64_t> counts; // classes*classes row-major

    std::int64_t at(int truth, int pred) const { return counts[static_cast<std::size_t>(truth) * classes + pred]; }
    std::int64_t& at(int truth, int pred) { return counts[static_cast<std::size_t>(truth) * classes + pred]; }
    std::int64_t total() const;
    void merge(const ConfusionMatrix& other);
};

ConfusionMatrix confusion(const LabelMap& pred, const std::vector<std::uint8_t>& gt,
                          const std::vector<std::uint8_t>& mask, int classes);

struct IoUReport {
    std::vector<double> per_class; // NaN where undefined
    std::vector<bool> defined;     // class absent from both prediction and truth -> false
    double miou = 0.0;             // mean over defined classes
};

IoUReport iou_report(const ConfusionMatrix& cm);

struct BiasDecomposition {
    double term_pred_vs_pseudo = 0.0; // mean |P - onehot(pseudo)| over pixels and classes
    double term_pseudo_vs_true = 0.0; // mean |onehot(pseudo) - onehot(gt)|
};

BiasDecomposition bias_decomposition(const ProbMap& primary, const std::vector<std::uint8_t>& pseudo_labels,
                                     const std::vector<std::uint8_t>& gt_labels);

// eval-mode forward of every image, combined-head argmax, merged confusion
IoUReport evaluate_checkpoint(const TwoHeadSegNet& net, const std::vector<LabeledImage>& dataset,
                              double alpha, double beta);

std::string iou_report_text(const IoUReport& rep, const std::string& title);

} // namespace rectseg
