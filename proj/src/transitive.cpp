#include "stance/transitive.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "stance/csv.hpp"
#include "stance/error.hpp"

namespace stance {

TransitiveIndex::TransitiveIndex(const Dataset& train)
    : graph_(build_graph(train)), partition_(graph_) {
    auto [rel, conflicts] = disagreement_relation(graph_, partition_);
    relation_ = std::move(rel);
    conflicts_ = std::move(conflicts);
    for (const auto& c : conflicts_) conflicted_reps_.insert(c.class_rep);
}

std::optional<Label> TransitiveIndex::derive(SentenceId a, SentenceId b) const {
    // Ids minted after the index snapshot are edge-less singletons.
    const auto n = static_cast<SentenceId>(partition_.n_sentences());
    if (a >= n || b >= n) return a == b ? std::optional(Label::Agreed) : std::nullopt;
    return derive_label(partition_, relation_, a, b);
}

bool TransitiveIndex::touches_conflicted(SentenceId a, SentenceId b) const {
    const auto n = static_cast<SentenceId>(partition_.n_sentences());
    if (a >= n || b >= n) return false;
    return class_conflicted(partition_.class_of(a)) || class_conflicted(partition_.class_of(b));
}

std::vector<TransitivePrediction> predict_pairs(const Dataset& train, const Dataset& queries,
                                                bool skip_conflicted) {
    if (!train.shares_store_with(queries))
        throw DataError("train and query datasets must share one sentence store");

    const TransitiveIndex index(train);
    const auto& p = index.partition();

    std::vector<TransitivePrediction> out;
    for (const auto& q : queries.pairs) {
        const auto label = index.derive(q.premise, q.hypothesis);
        if (!label) continue;
        if (skip_conflicted && index.touches_conflicted(q.premise, q.hypothesis)) continue;

        TransitivePrediction tp;
        tp.row_id = q.row_id;
        tp.label = *label;
        tp.via_relation = *label == Label::Disagreed;
        tp.class_size = tp.via_relation
                            ? p.class_size(q.premise) + p.class_size(q.hypothesis)
                            : p.class_size(q.premise);
        out.push_back(std::move(tp));
    }
    return out;
}

LabelList overlay_predictions(const ProbList& classifier,
                              const std::vector<TransitivePrediction>& transitive) {
    std::unordered_map<std::string, Label> override_by_id;
    for (const auto& tp : transitive) override_by_id.emplace(tp.row_id, tp.label);

    std::unordered_set<std::string> hit;
    LabelList out;
    out.reserve(classifier.size());
    for (const auto& [id, probs] : classifier) {
        auto it = override_by_id.find(id);
        if (it != override_by_id.end()) {
            out.emplace_back(id, it->second);
            hit.insert(id);
        } else {
            out.emplace_back(id, probs.argmax());
        }
    }
    if (hit.size() != override_by_id.size())
        throw DataError("transitive predictions cover row ids absent from the classifier output");
    return out;
}

AugmentResult augment(const Dataset& train, std::size_t cap) {
    const TransitiveIndex index(train);
    const auto& p = index.partition();
    const auto& rel = index.relation();

    std::set<IdPair> in_train;
    for (const auto& pr : train.pairs)
        if (pr.premise != pr.hypothesis) in_train.insert(ordered_pair(pr.premise, pr.hypothesis));

    AugmentResult result;
    std::vector<AugmentedPair> all;
    auto emit = [&](SentenceId u, SentenceId v, Label label) {
        const IdPair pair = ordered_pair(u, v);
        if (in_train.count(pair)) return;
        all.push_back(AugmentedPair{pair.first, pair.second, label});
    };

    for (SentenceId rep : p.representatives()) {
        if (index.class_conflicted(rep)) continue;
        const auto& m = p.members(rep);
        for (std::size_t i = 0; i < m.size(); ++i)
            for (std::size_t j = i + 1; j < m.size(); ++j) emit(m[i], m[j], Label::Agreed);
    }
    for (const auto& [ra, rb] : rel.pairs()) {
        if (index.class_conflicted(ra) || index.class_conflicted(rb)) continue;
        for (SentenceId u : p.members(ra))
            for (SentenceId v : p.members(rb)) emit(u, v, Label::Disagreed);
    }

    std::sort(all.begin(), all.end(), [](const AugmentedPair& l, const AugmentedPair& r) {
        return std::tie(l.premise, l.hypothesis) < std::tie(r.premise, r.hypothesis);
    });
    result.total_derivable = all.size();
    if (all.size() > cap) {
        all.resize(cap);
        result.truncated = true;
    }
    result.pairs = std::move(all);
    return result;
}

void save_transitive(const std::filesystem::path& path,
                     const std::vector<TransitivePrediction>& preds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    csv::write_row(out, {"id", "label"});
    for (const auto& tp : preds) csv::write_row(out, {tp.row_id, std::string(label_name(tp.label))});
}

void save_augmented(const std::filesystem::path& path, const AugmentResult& result,
                    const SentenceStore& store) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    csv::write_row(out, {"title1", "title2", "label"});
    for (const auto& ap : result.pairs)
        csv::write_row(out,
                       {store.text(ap.premise), store.text(ap.hypothesis),
                        std::string(label_name(ap.label))});
}

}  // namespace stance
