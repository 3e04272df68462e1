#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stance/prob.hpp"

namespace stance {

// Per-model class probabilities for an aligned set of rows. Every model
// covers every row.
struct PredictionMatrix {
    std::vector<std::string> row_ids;
    std::size_t n_models = 0;
    std::vector<ProbVector> cells;  // row-major: cells[row * n_models + model]

    const ProbVector& at(std::size_t row, std::size_t model) const {
        return cells[row * n_models + model];
    }
};

// Aligns per-model prediction lists by row_id; row order follows the first
// model. Throws DataError on ragged input (a model missing a row, or
// mismatched row sets).
PredictionMatrix align_predictions(const std::vector<ProbList>& model_outputs);

struct StackedFeatures {
    std::vector<std::string> row_ids;
    std::size_t n_cols = 0;
    std::vector<double> values;  // row-major

    std::size_t n_rows() const { return row_ids.size(); }
    std::span<const double> row(std::size_t r) const {
        return {values.data() + r * n_cols, n_cols};
    }
};

// Horizontal concatenation in model order: columns [3j, 3j+3) hold model j's
// probability vector. Row order preserved.
StackedFeatures stack_features(const PredictionMatrix& m);

struct TrainConfig {
    double learning_rate = 0.5;
    std::size_t max_epochs = 300;
    std::size_t patience = 20;
    std::uint64_t seed = 1;
    std::size_t batch_size = 32;
    std::size_t hidden_width = 0;  // 0 = plain multinomial logistic model

    void validate() const;  // all positive, patience <= max_epochs
};

// Multinomial logistic stacker, optionally with one tanh hidden layer.
// w1 is (n_features+1) x out_width row-major with the bias row last;
// with a hidden layer, w2 is (hidden_width+1) x 3 and out_width is
// hidden_width, otherwise w2 is empty and out_width is 3.
struct StackerModel {
    std::size_t n_features = 0;
    std::size_t hidden_width = 0;
    std::uint64_t seed = 0;
    std::vector<double> w1;
    std::vector<double> w2;
    std::size_t epochs_run = 0;
    double best_val_accuracy = 0.0;

    std::size_t n_models() const { return n_features / 3; }
    std::size_t n_parameters() const { return w1.size() + w2.size(); }

    // Exponentially normalized with a max shift: valid for any finite input.
    ProbVector predict_row(std::span<const double> features) const;
};

// Mini-batch gradient descent on cross-entropy against (possibly soft)
// targets, mini-batch order a seeded permutation drawn fresh each epoch.
// After each epoch validation accuracy is measured; training stops once
// `patience` epochs pass without improvement (patience 0 stops after the
// first epoch) or at max_epochs, and the best-validation-epoch parameters are
// returned. Deterministic given cfg.seed. Throws DataError on empty or
// misaligned inputs, non-finite features, or train/val row_id overlap.
StackerModel train_stacker(const StackedFeatures& train, const std::vector<ProbVector>& train_targets,
                           const StackedFeatures& val, const std::vector<Label>& val_labels,
                           const TrainConfig& cfg);

ProbList stacker_predict(const StackerModel& model, const StackedFeatures& feats);

// Mean cross-entropy over `rows` plus its gradient with respect to all
// parameters (w1 then w2, matching layout). Used by training per mini-batch
// and by the finite-difference gradient check.
double stacker_loss_and_gradient(const StackerModel& model, const StackedFeatures& feats,
                                 std::span<const std::size_t> rows,
                                 const std::vector<ProbVector>& targets,
                                 std::vector<double>& grad);

// Versioned text format; weights in decimal with 17 significant digits so a
// reloaded model is bit-identical.
void save_stacker(const std::filesystem::path& path, const StackerModel& model);
StackerModel load_stacker(const std::filesystem::path& path);

}  // namespace stance
