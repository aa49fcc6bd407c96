#pragma once

#include <string>
#include <vector>

#include "rectseg/config.hpp"
#include "rectseg/eval.hpp"

namespace rectseg {

struct PipelineOutputs {
    std::string run_id;
    std::string theta_s_path;
    std::string theta_t_path;
    IoUReport source_model_on_source_test;
    IoUReport source_model_on_target_test;
    IoUReport adapted_on_target_test;
    std::vector<TrainLogRow> adapt_history;
};

// gen-data -> pretrain -> pseudo-label -> adapt -> evaluate, emitting every
// artifact under out_dir. Stage failures abort with the stage name.
PipelineOutputs run_pipeline(const PipelineConfig& cfg, const std::string& out_dir);

void generate_datasets(const PipelineConfig& cfg, const std::string& data_dir);

// entry point used by the rectseg binary; returns the process exit code
int run_cli(const std::vector<std::string>& args);

} // namespace rectseg
