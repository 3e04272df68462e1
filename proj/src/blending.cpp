#include "stance/blending.hpp"

#include <cmath>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "stance/error.hpp"

namespace stance {

void BlendSpec::validate() const {
    if (!(w >= 0.0 && w <= 1.0)) throw DataError("blend weight must lie in [0, 1]");
}

namespace {

// Re-orders b to match a's row order; throws on any mismatch.
std::vector<const ProbVector*> align_to(const ProbList& a, const ProbList& b) {
    if (a.size() != b.size())
        throw DataError("prediction sets differ in size: " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()));
    std::unordered_map<std::string, const ProbVector*> by_id;
    by_id.reserve(b.size());
    for (const auto& [id, v] : b) by_id.emplace(id, &v);
    if (by_id.size() != b.size()) throw DataError("duplicate row_id in prediction set");

    std::vector<const ProbVector*> out;
    out.reserve(a.size());
    for (const auto& [id, _] : a) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw DataError("row '" + id + "' missing from second set");
        out.push_back(it->second);
    }
    return out;
}

}  // namespace

ProbList blend(const ProbList& a, const ProbList& b, const BlendSpec& spec) {
    spec.validate();
    const auto b_rows = align_to(a, b);

    ProbList out;
    out.reserve(a.size());
    for (std::size_t r = 0; r < a.size(); ++r) {
        ProbVector v;
        for (std::size_t c = 0; c < kNumClasses; ++c)
            v[c] = spec.w * a[r].second[c] + (1.0 - spec.w) * (*b_rows[r])[c];
        out.emplace_back(a[r].first, v);
    }
    return out;
}

EvalReport evaluate_accuracy(const LabelList& preds, const LabelList& gold) {
    if (preds.size() != gold.size())
        throw DataError("prediction and gold sets differ in size: " +
                        std::to_string(preds.size()) + " vs " + std::to_string(gold.size()));
    std::unordered_map<std::string, Label> gold_by_id;
    gold_by_id.reserve(gold.size());
    for (const auto& [id, l] : gold) gold_by_id.emplace(id, l);
    if (gold_by_id.size() != gold.size()) throw DataError("duplicate row_id in gold labels");

    EvalReport report;
    report.n_rows = preds.size();
    std::unordered_map<std::string, bool> seen;
    for (const auto& [id, pred] : preds) {
        auto it = gold_by_id.find(id);
        if (it == gold_by_id.end()) throw DataError("row '" + id + "' missing from gold labels");
        if (!seen.emplace(id, true).second) throw DataError("duplicate row_id '" + id + "' in predictions");
        ++report.confusion[class_index(it->second)][class_index(pred)];
        if (pred == it->second) ++report.n_correct;
    }
    report.accuracy =
        report.n_rows ? static_cast<double>(report.n_correct) / static_cast<double>(report.n_rows)
                      : 0.0;
    return report;
}

double balanced_accuracy(const EvalReport& report) {
    double sum = 0.0;
    std::size_t classes = 0;
    for (std::size_t g = 0; g < kNumClasses; ++g) {
        std::size_t total = 0;
        for (std::size_t p = 0; p < kNumClasses; ++p) total += report.confusion[g][p];
        if (total == 0) continue;
        sum += static_cast<double>(report.confusion[g][g]) / static_cast<double>(total);
        ++classes;
    }
    return classes ? sum / static_cast<double>(classes) : 0.0;
}

std::string eval_report_json(const EvalReport& report, bool balanced) {
    nlohmann::ordered_json j;
    j["n"] = report.n_rows;
    j["correct"] = report.n_correct;
    j["accuracy"] = report.accuracy;
    nlohmann::ordered_json conf = nlohmann::ordered_json::array();
    for (const auto& row : report.confusion)
        for (std::size_t v : row) conf.push_back(v);
    j["confusion"] = std::move(conf);
    if (balanced) j["balanced_accuracy"] = balanced_accuracy(report);
    return j.dump(2) + "\n";
}

WeightSearchResult search_blend_weight(const ProbList& a, const ProbList& b, const LabelList& gold,
                                       double step) {
    if (a.empty()) throw DataError("cannot search blend weight over an empty prediction set");
    if (!(step > 0.0 && step <= 1.0)) throw DataError("grid step must lie in (0, 1]");
    const auto n_steps_f = 1.0 / step;
    const auto n_steps = static_cast<std::size_t>(std::llround(n_steps_f));
    if (std::fabs(n_steps_f - static_cast<double>(n_steps)) > 1e-9)
        throw DataError("grid step must divide 1 evenly");

    const auto b_rows = align_to(a, b);
    std::unordered_map<std::string, Label> gold_by_id;
    gold_by_id.reserve(gold.size());
    for (const auto& [id, l] : gold) gold_by_id.emplace(id, l);

    std::size_t best_correct = 0;
    std::size_t best_i = 0;
    bool have_best = false;
    for (std::size_t i = 0; i <= n_steps; ++i) {
        const double w = static_cast<double>(i) / static_cast<double>(n_steps);
        std::size_t correct = 0;
        for (std::size_t r = 0; r < a.size(); ++r) {
            ProbVector v;
            for (std::size_t c = 0; c < kNumClasses; ++c)
                v[c] = w * a[r].second[c] + (1.0 - w) * (*b_rows[r])[c];
            auto it = gold_by_id.find(a[r].first);
            if (it == gold_by_id.end())
                throw DataError("row '" + a[r].first + "' missing from gold labels");
            if (v.argmax() == it->second) ++correct;
        }
        if (!have_best || correct > best_correct) {
            best_correct = correct;
            best_i = i;
            have_best = true;
        }
    }

    WeightSearchResult result;
    result.spec.w = static_cast<double>(best_i) / static_cast<double>(n_steps);

    // Self-consistency: the reported accuracy is evaluate_accuracy recomputed
    // on the returned spec.
    LabelList argmaxed;
    argmaxed.reserve(a.size());
    for (const auto& [id, v] : blend(a, b, result.spec)) argmaxed.emplace_back(id, v.argmax());
    result.report = evaluate_accuracy(argmaxed, gold);
    return result;
}

}  // namespace stance
