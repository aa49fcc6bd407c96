#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rectseg/rng.hpp"

namespace rectseg {

struct LabeledImage {
    int h = 0, w = 0;
    std::vector<double> image;        // h*w*3, values in [0,1]
    std::vector<std::uint8_t> labels; // h*w class ids
    std::vector<std::uint8_t> mask;   // h*w, 1 = pixel participates in loss/metrics
};

// Appearance and class-frequency knobs for one domain.
struct DomainParams {
    std::vector<std::array<double, 3>> base_colors; // per class
    double hue_shift = 0.0;                         // target-only hue rotation, radians
    double noise_sigma = 0.05;
    double texture_amplitude = 0.04;
    std::vector<double> class_freq; // sampling weights for shape classes 1..C-1

    void validate(int classes) const;
};

struct SceneParams {
    int canvas = 32;
    int classes = 5;
    int shapes_min = 2;
    int shapes_max = 5;
    DomainParams domain;
};

// Renders n scenes of random rectangles/disks over background class 0.
// Byte-identical output for identical (seed, n, params).
std::vector<LabeledImage> gen_domain(std::uint64_t seed, int n, const SceneParams& params);

DomainParams default_source_domain(int classes);
DomainParams default_target_domain(int classes);
// "none" preset: target drawn from the source appearance (control condition)
DomainParams no_shift_target_domain(int classes);

struct AugmentPolicy {
    double flip_p = 0.5;
    double scale_min = 0.8;
    double scale_max = 1.2;
    int crop_h = 24;
    int crop_w = 24;
};

// Horizontal flip + scale jitter + random crop, all applied identically to
// image, labels and mask. Labels and mask resample nearest-neighbor.
LabeledImage augment(const LabeledImage& img, Rng& rng, const AugmentPolicy& policy);

LabeledImage hflip(const LabeledImage& img);
LabeledImage rescale(const LabeledImage& img, double s);
LabeledImage crop(const LabeledImage& img, int y0, int x0, int ch, int cw);

// Dataset directory io: PPM images, PGM labels/masks plus a manifest listing
// the triples and the generating parameters.
void save_dataset(const std::string& dir, const std::vector<LabeledImage>& data,
                  std::uint64_t seed, const SceneParams& params);
std::vector<LabeledImage> load_dataset(const std::string& dir);

} // namespace rectseg
