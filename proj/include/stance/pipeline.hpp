#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stance/dataset.hpp"
#include "stance/ensemble.hpp"

namespace stance {

// Inputs and knobs for the full pipeline run: stack -> train stacker ->
// blend (weight search on the validation split) -> pseudo-label export ->
// optional second level from re-ingested prediction files -> second blend ->
// transitive overlay. Stages communicate only through files under out_dir.
struct PipelineConfig {
    std::filesystem::path train_path;
    std::filesystem::path test_path;
    std::string schema = "minimal";

    std::vector<std::filesystem::path> model_preds_train;
    std::vector<std::filesystem::path> model_preds_test;
    std::filesystem::path external_preds_train;  // must cover the validation ids
    std::filesystem::path external_preds_test;

    // Optional second level (fine-tuned model outputs, re-ingested).
    std::vector<std::filesystem::path> second_model_preds_train;
    std::vector<std::filesystem::path> second_model_preds_test;
    std::filesystem::path second_external_preds_train;
    std::filesystem::path second_external_preds_test;

    std::filesystem::path val_ids_path;  // one row_id per line, subset of train
    std::filesystem::path out_dir;

    double grid_step = 0.01;
    std::optional<double> fixed_blend_weight;         // skip the level-1 search
    std::optional<double> second_fixed_blend_weight;  // skip the level-2 search
    TrainConfig stacker;
    bool skip_conflicted = true;
    bool harden_pseudo = false;
};

struct PipelineResult {
    std::filesystem::path final_labels_path;
    std::size_t n_test_rows = 0;
    std::size_t n_transitive = 0;
    std::size_t n_overridden = 0;
    double stacker_val_accuracy = 0.0;
    double blend_weight = 0.0;
    double blend_val_accuracy = 0.0;
    std::optional<double> second_blend_weight;
    std::optional<double> second_blend_val_accuracy;
};

// Runs every stage, writing artifacts and manifests into stage-named
// subdirectories of out_dir plus a top-level pipeline_report.json. Identical
// config and inputs produce byte-identical outputs. Throws DataError for bad
// inputs and InternalError if transitive predictions contradict each other.
PipelineResult cmd_pipeline(const PipelineConfig& config);

// Stage feature files: header id,f0..f{n-1}, 17-significant-digit values.
void save_features(const std::filesystem::path& path, const StackedFeatures& feats);
StackedFeatures load_features(const std::filesystem::path& path);

LabelList argmax_labels(const ProbList& preds);

}  // namespace stance
