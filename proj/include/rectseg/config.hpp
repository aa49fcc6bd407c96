#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rectseg/train.hpp"

namespace rectseg {

// Full experiment description: data generation plus training plus inference.
// Serializes to flat key=value text ('#' comments); unknown keys are
// rejected on parse so manifests replay exactly.
struct PipelineConfig {
    ExperimentConfig exp;

    // data generation
    int canvas = 32;
    int n_source = 400;
    int n_source_test = 100;
    int n_target = 400;
    int n_target_test = 100;
    std::string shift_preset = "default"; // default | none

    // pseudo-label source model: strong (full pretraining) or weak
    std::string pseudo_source = "strong";
    double weak_fraction = 0.5; // weak model trains this fraction of source_iters

    void validate() const;
};

PipelineConfig parse_config_text(const std::string& text);
PipelineConfig load_config_file(const std::string& path);
std::string serialize_config(const PipelineConfig& cfg);

// stable id derived from the resolved config (wall clock excluded)
std::string config_run_id(const PipelineConfig& cfg);

std::uint64_t fnv1a64_file(const std::string& path);
std::uint64_t fnv1a64_bytes(const void* data, std::size_t n);

// canonical float formatting used by every emitted file
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);

// loss history csv: iter,lr,loss,ce_term,var_term
void write_history_csv(const std::string& path, const std::vector<TrainLogRow>& history);

// minimal line chart, one polyline per series
void write_svg_lines(const std::string& path, const std::vector<std::vector<double>>& series,
                     const std::vector<std::string>& names, const std::string& title);

SceneParams scene_params_for(const PipelineConfig& cfg, const std::string& split);

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

} // namespace rectseg
