#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stance/label.hpp"
#include "stance/prob.hpp"

namespace stance {

using SentenceId = std::uint32_t;

// Interns normalized sentence strings, assigning dense ids in first-seen
// order. Interning the same text (up to normalization) twice returns the same
// id. Immutable once loading is done; loading itself is single-threaded so id
// assignment is deterministic.
class SentenceStore {
public:
    SentenceId intern(std::string_view raw_text);
    std::optional<SentenceId> find(std::string_view raw_text) const;
    const std::string& text(SentenceId id) const;
    std::size_t size() const { return texts_.size(); }

private:
    std::vector<std::string> texts_;
    std::unordered_map<std::string, SentenceId> index_;
};

struct PairRecord {
    std::string row_id;
    SentenceId premise = 0;
    SentenceId hypothesis = 0;
    std::optional<Label> label;
};

struct Dataset {
    std::shared_ptr<SentenceStore> store;
    std::vector<PairRecord> pairs;

    bool fully_labeled() const;
    bool shares_store_with(const Dataset& other) const { return store == other.store; }
};

// Column mapping for pair files. `label_col` is only consulted when loading
// labeled data.
struct PairSchema {
    std::string id_col = "id";
    std::string premise_col = "title1";
    std::string hypothesis_col = "title2";
    std::string label_col = "label";

    static PairSchema minimal() { return {}; }
    // The 8-column competition layout (Mandarin titles).
    static PairSchema wsdm() { return {"id", "title1_zh", "title2_zh", "label"}; }
    // "minimal" | "wsdm" | "id=...,premise=...,hypothesis=...,label=...".
    static PairSchema parse(std::string_view spec);
};

// Loads a pair file. With `labeled`, the label column must exist; an empty
// label field yields an unlabeled record, anything else must parse as a label.
// Sentences are interned (through normalize_sentence) into `store`, or into a
// fresh store when none is given; passing one store across several loads gives
// joint interning. Throws DataError on missing file, missing schema column,
// bad label, or duplicate row_id.
Dataset load_pairs(const std::filesystem::path& path, const PairSchema& schema, bool labeled,
                   std::shared_ptr<SentenceStore> store = nullptr);

// Canonical form: id,title1,title2 plus a label column when any row has one.
void save_pairs(const std::filesystem::path& path, const Dataset& ds);

struct DatasetStats {
    std::size_t n_pairs = 0;
    std::array<std::size_t, kNumClasses> label_counts{};
    std::size_t n_unlabeled = 0;
    std::size_t n_distinct_sentences = 0;
    std::optional<std::size_t> shared_sentences;  // present when `b` was given
};

DatasetStats dataset_stats(const Dataset& a, const Dataset* b = nullptr);
std::string dataset_stats_json(const DatasetStats& stats);

// Prediction files carry the header id,p_agreed,p_disagreed,p_unrelated.
// Components must be non-negative and sum to 1 within 1e-3; rows are
// renormalized only when the sum is off by more than 1e-9, so writing and
// re-reading a valid file is bit-exact. Throws DataError on malformed numbers,
// negative components, out-of-tolerance sums, or duplicate row ids.
ProbList load_predictions(const std::filesystem::path& path);
void save_predictions(const std::filesystem::path& path, const ProbList& preds);

// Plain id,label files (transitive predictions, final outputs, gold labels).
LabelList load_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, const LabelList& rows);

// One row_id per line, blank lines ignored.
std::vector<std::string> load_id_list(const std::filesystem::path& path);

}  // namespace stance
