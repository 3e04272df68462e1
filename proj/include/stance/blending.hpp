#pragma once

#include <array>
#include <string>

#include "stance/prob.hpp"

namespace stance {

// Convex weight for the first prediction set; the second gets 1 - w.
struct BlendSpec {
    double w = 0.5;
    void validate() const;
};

// Per-row, per-class convex combination. Row sets must be identical; output
// follows the order of `a`.
ProbList blend(const ProbList& a, const ProbList& b, const BlendSpec& spec);

struct EvalReport {
    std::size_t n_rows = 0;
    std::size_t n_correct = 0;
    double accuracy = 0.0;
    // confusion[gold][pred], canonical class order.
    std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};
};

// Exact fraction of matching labels plus the confusion matrix. Requires
// identical row_id sets.
EvalReport evaluate_accuracy(const LabelList& preds, const LabelList& gold);

// Per-class-weighted mode: the mean per-class recall over classes that occur
// in the gold labels.
double balanced_accuracy(const EvalReport& report);

// Fixed keys: n, correct, accuracy, confusion (3x3 row-major, gold-major).
// With `balanced`, a balanced_accuracy key is appended.
std::string eval_report_json(const EvalReport& report, bool balanced = false);

struct WeightSearchResult {
    BlendSpec spec;
    EvalReport report;
};

// Exhaustive grid search over w in {0, step, ..., 1} maximizing argmax-blend
// accuracy against gold labels; ties resolve to the smallest w. `step` must
// divide 1 evenly.
WeightSearchResult search_blend_weight(const ProbList& a, const ProbList& b,
                                       const LabelList& gold, double step = 0.01);

}  // namespace stance
