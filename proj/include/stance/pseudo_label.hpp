#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "stance/dataset.hpp"

namespace stance {

// A sentence pair with a probability-vector target, used for pseudo-label
// fine-tuning corpora.
struct SoftRecord {
    std::string row_id;
    SentenceId premise = 0;
    SentenceId hypothesis = 0;
    ProbVector target;
};

// TestOnly: the pseudo-labeled test rows alone. TrainPlusTest: one-hot train
// rows followed by the pseudo-labeled test rows.
enum class MergeMode { TestOnly, TrainPlusTest };

// One SoftRecord per test row, target taken verbatim from the predictions
// (no argmax hardening unless `harden`). Predictions must cover exactly the
// test row ids. Order follows the test rows.
std::vector<SoftRecord> make_soft_labels(const Dataset& test, const ProbList& preds,
                                         bool harden = false);

// Assembles a fine-tuning corpus. Train rows must be labeled; their targets
// are one-hot. A row_id present in both train and soft records is an error.
// Rows whose id is in `exclude_row_ids` (e.g. the early-stopping validation
// split) are left out. Records from both sources must share one store.
std::vector<SoftRecord> merge(const Dataset& train, const std::vector<SoftRecord>& soft,
                              MergeMode mode,
                              const std::unordered_set<std::string>* exclude_row_ids = nullptr);

// Soft-label files: id,title1,title2,p_agreed,p_disagreed,p_unrelated with
// 17-significant-digit targets, lossless on reload.
void save_soft_records(const std::filesystem::path& path, const std::vector<SoftRecord>& records,
                       const SentenceStore& store);
std::vector<SoftRecord> load_soft_records(const std::filesystem::path& path,
                                          std::shared_ptr<SentenceStore> store);

}  // namespace stance
