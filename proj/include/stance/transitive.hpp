#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "stance/relation_graph.hpp"

namespace stance {

// Everything needed to answer derive_label queries for one training set:
// graph, partition, relation, and the set of classes containing a conflict.
class TransitiveIndex {
public:
    explicit TransitiveIndex(const Dataset& train);

    std::optional<Label> derive(SentenceId a, SentenceId b) const;
    bool touches_conflicted(SentenceId a, SentenceId b) const;
    bool class_conflicted(SentenceId rep) const { return conflicted_reps_.count(rep) > 0; }

    const RelationGraph& graph() const { return graph_; }
    const AgreementPartition& partition() const { return partition_; }
    const DisagreementRelation& relation() const { return relation_; }
    const std::vector<Conflict>& conflicts() const { return conflicts_; }

private:
    RelationGraph graph_;
    AgreementPartition partition_;
    DisagreementRelation relation_;
    std::vector<Conflict> conflicts_;
    std::unordered_set<SentenceId> conflicted_reps_;
};

struct TransitivePrediction {
    std::string row_id;
    Label label = Label::Agreed;  // Agreed or Disagreed only
    // Evidence summary: the agreement-class size behind the derivation (the
    // shared class for Agreed, the two class sizes summed for Disagreed), and
    // whether the disagreement relation was involved.
    std::size_t class_size = 0;
    bool via_relation = false;
};

// Answers each query row from the closure of the labeled training data.
// Requires joint interning (same store object). With skip_conflicted, rows
// whose endpoints touch a class containing a conflict produce no prediction.
// Output follows query order.
std::vector<TransitivePrediction> predict_pairs(const Dataset& train, const Dataset& queries,
                                                bool skip_conflicted = true);

// Transitive labels override the classifier argmax (ties to the lowest class
// index); other rows keep the argmax. Preserves classifier row order. Every
// transitive row_id must appear among the classifier rows.
LabelList overlay_predictions(const ProbList& classifier,
                              const std::vector<TransitivePrediction>& transitive);

struct AugmentedPair {
    SentenceId premise = 0;
    SentenceId hypothesis = 0;
    Label label = Label::Agreed;
};

struct AugmentResult {
    std::vector<AugmentedPair> pairs;  // ordered by (premise, hypothesis)
    std::size_t total_derivable = 0;   // count before truncation
    bool truncated = false;
};

// New pairs derivable from the training closure: closure minus every unordered
// pair present in train (under any label), with conflicted classes excluded
// entirely. Truncates at `cap` and reports the full count.
AugmentResult augment(const Dataset& train, std::size_t cap);

// id,label rows.
void save_transitive(const std::filesystem::path& path,
                     const std::vector<TransitivePrediction>& preds);
// title1,title2,label rows, texts resolved through the store.
void save_augmented(const std::filesystem::path& path, const AugmentResult& result,
                    const SentenceStore& store);

}  // namespace stance
