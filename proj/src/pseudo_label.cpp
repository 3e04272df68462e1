#include "stance/pseudo_label.hpp"

#include <cmath>
#include <fstream>
#include <unordered_map>

#include "stance/csv.hpp"
#include "stance/error.hpp"
#include "stance/num_format.hpp"

namespace stance {

std::vector<SoftRecord> make_soft_labels(const Dataset& test, const ProbList& preds, bool harden) {
    std::unordered_map<std::string, const ProbVector*> by_id;
    by_id.reserve(preds.size());
    for (const auto& [id, v] : preds) by_id.emplace(id, &v);
    if (by_id.size() != preds.size()) throw DataError("duplicate row_id in predictions");
    if (by_id.size() != test.pairs.size())
        throw DataError("predictions cover " + std::to_string(by_id.size()) + " rows, test has " +
                        std::to_string(test.pairs.size()));

    std::vector<SoftRecord> out;
    out.reserve(test.pairs.size());
    for (const auto& pr : test.pairs) {
        auto it = by_id.find(pr.row_id);
        if (it == by_id.end())
            throw DataError("no prediction for test row '" + pr.row_id + "'");
        SoftRecord rec;
        rec.row_id = pr.row_id;
        rec.premise = pr.premise;
        rec.hypothesis = pr.hypothesis;
        rec.target = harden ? one_hot(it->second->argmax()) : *it->second;
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<SoftRecord> merge(const Dataset& train, const std::vector<SoftRecord>& soft,
                              MergeMode mode,
                              const std::unordered_set<std::string>* exclude_row_ids) {
    auto excluded = [&](const std::string& id) {
        return exclude_row_ids && exclude_row_ids->count(id) > 0;
    };

    std::vector<SoftRecord> out;
    if (mode == MergeMode::TrainPlusTest) {
        std::unordered_set<std::string> soft_ids;
        soft_ids.reserve(soft.size());
        for (const auto& rec : soft) soft_ids.insert(rec.row_id);

        out.reserve(train.pairs.size() + soft.size());
        for (const auto& pr : train.pairs) {
            if (!pr.label)
                throw DataError("unlabeled train row '" + pr.row_id + "' in merge input");
            if (soft_ids.count(pr.row_id))
                throw DataError("row_id '" + pr.row_id + "' appears in both train and test");
            if (excluded(pr.row_id)) continue;
            out.push_back(SoftRecord{pr.row_id, pr.premise, pr.hypothesis, one_hot(*pr.label)});
        }
    } else {
        out.reserve(soft.size());
    }
    for (const auto& rec : soft) {
        if (excluded(rec.row_id)) continue;
        out.push_back(rec);
    }
    return out;
}

void save_soft_records(const std::filesystem::path& path, const std::vector<SoftRecord>& records,
                       const SentenceStore& store) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    csv::write_row(out, {"id", "title1", "title2", "p_agreed", "p_disagreed", "p_unrelated"});
    for (const auto& rec : records)
        csv::write_row(out, {rec.row_id, store.text(rec.premise), store.text(rec.hypothesis),
                             format_double(rec.target[0]), format_double(rec.target[1]),
                             format_double(rec.target[2])});
}

std::vector<SoftRecord> load_soft_records(const std::filesystem::path& path,
                                          std::shared_ptr<SentenceStore> store) {
    const csv::Table table = csv::read_file(path);
    const std::string origin = path.string();
    auto col = [&](const char* name) {
        auto idx = table.column(name);
        if (!idx) throw DataError(origin + ": missing column '" + std::string(name) + "'");
        return *idx;
    };
    const std::size_t id_idx = col("id");
    const std::size_t t1 = col("title1");
    const std::size_t t2 = col("title2");
    const std::array<std::size_t, kNumClasses> probs{col("p_agreed"), col("p_disagreed"),
                                                     col("p_unrelated")};

    if (!store) store = std::make_shared<SentenceStore>();
    std::vector<SoftRecord> out;
    out.reserve(table.rows.size());
    std::unordered_set<std::string> seen;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string ctx = origin + ": row " + std::to_string(r + 1);
        SoftRecord rec;
        rec.row_id = row[id_idx];
        if (!seen.insert(rec.row_id).second)
            throw DataError(ctx + ": duplicate row_id '" + rec.row_id + "'");
        rec.premise = store->intern(row[t1]);
        rec.hypothesis = store->intern(row[t2]);
        double sum = 0.0;
        for (std::size_t k = 0; k < kNumClasses; ++k) {
            const double v = parse_double(row[probs[k]], ctx);
            if (!std::isfinite(v)) throw DataError(ctx + ": non-finite probability");
            if (v < 0.0) throw DataError(ctx + ": negative probability");
            rec.target[k] = v;
            sum += v;
        }
        if (std::fabs(sum - 1.0) > 1e-3)
            throw DataError(ctx + ": probabilities sum to " + format_double(sum));
        if (std::fabs(sum - 1.0) > 1e-9) rec.target = renormalized(rec.target);
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace stance
