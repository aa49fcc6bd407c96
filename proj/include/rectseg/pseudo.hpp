#pragma once

#include <string>
#include <vector>

#include "rectseg/model.hpp"
#include "rectseg/synthdata.hpp"

namespace rectseg {

// Frozen hard labels on the target-domain training set, with per-pixel
// confidence (max softmax probability) and a validity mask.
struct PseudoLabelSet {
    int h = 0, w = 0, classes = 0;
    std::vector<std::vector<std::uint8_t>> labels;
    std::vector<std::vector<double>> confidence;
    std::vector<std::vector<std::uint8_t>> valid;
    std::string provenance;
    std::vector<double> tau_history;

    std::size_t image_count() const { return labels.size(); }
};

// Primary-head argmax labels from an eval-mode pass of the source-trained
// model; ties go to the lowest class index and every pixel starts valid.
PseudoLabelSet generate_pseudo_labels(const TwoHeadSegNet& net, const std::vector<LabeledImage>& targets,
                                      const std::string& provenance);

// Keeps only pixels with confidence strictly above tau. Labels and
// confidences are untouched.
PseudoLabelSet threshold_filter(const PseudoLabelSet& pl, double tau);

struct PseudoQuality {
    double accuracy = 0.0;                  // over valid pixels
    std::vector<double> per_class_accuracy; // indexed by ground-truth class; -1 if class absent
    double fraction_valid = 0.0;
};

PseudoQuality pseudo_quality_report(const PseudoLabelSet& pl, const std::vector<LabeledImage>& ground_truth);

void save_pseudo_labels(const std::string& dir, const PseudoLabelSet& pl);
PseudoLabelSet load_pseudo_labels(const std::string& dir);

} // namespace rectseg
