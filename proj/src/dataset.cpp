#include "stance/dataset.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "stance/csv.hpp"
#include "stance/error.hpp"
#include "stance/num_format.hpp"
#include "stance/text.hpp"

namespace stance {

SentenceId SentenceStore::intern(std::string_view raw_text) {
    std::string norm = normalize_sentence(raw_text);
    auto it = index_.find(norm);
    if (it != index_.end()) return it->second;
    const auto id = static_cast<SentenceId>(texts_.size());
    index_.emplace(norm, id);
    texts_.push_back(std::move(norm));
    return id;
}

std::optional<SentenceId> SentenceStore::find(std::string_view raw_text) const {
    auto it = index_.find(normalize_sentence(raw_text));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const std::string& SentenceStore::text(SentenceId id) const { return texts_.at(id); }

bool Dataset::fully_labeled() const {
    for (const auto& pr : pairs)
        if (!pr.label) return false;
    return true;
}

PairSchema PairSchema::parse(std::string_view spec) {
    if (spec.empty() || spec == "minimal") return minimal();
    if (spec == "wsdm") return wsdm();
    PairSchema s;
    bool saw_id = false, saw_premise = false, saw_hypothesis = false;
    std::string_view rest = spec;
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        std::string_view item = rest.substr(0, comma);
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        const auto eq = item.find('=');
        if (eq == std::string_view::npos)
            throw DataError("bad schema item '" + std::string(item) +
                            "' (expected key=column or a preset name)");
        std::string_view key = item.substr(0, eq);
        std::string value(item.substr(eq + 1));
        if (key == "id") {
            s.id_col = value;
            saw_id = true;
        } else if (key == "premise") {
            s.premise_col = value;
            saw_premise = true;
        } else if (key == "hypothesis") {
            s.hypothesis_col = value;
            saw_hypothesis = true;
        } else if (key == "label") {
            s.label_col = value;
        } else {
            throw DataError("unknown schema key '" + std::string(key) + "'");
        }
    }
    if (!saw_id || !saw_premise || !saw_hypothesis)
        throw DataError("schema must map id, premise, and hypothesis columns");
    return s;
}

namespace {

std::size_t require_column(const csv::Table& table, const std::string& name,
                           const std::string& origin) {
    auto idx = table.column(name);
    if (!idx) throw DataError(origin + ": missing column '" + name + "'");
    return *idx;
}

}  // namespace

Dataset load_pairs(const std::filesystem::path& path, const PairSchema& schema, bool labeled,
                   std::shared_ptr<SentenceStore> store) {
    const csv::Table table = csv::read_file(path);
    const std::string origin = path.string();

    const std::size_t id_idx = require_column(table, schema.id_col, origin);
    const std::size_t premise_idx = require_column(table, schema.premise_col, origin);
    const std::size_t hypothesis_idx = require_column(table, schema.hypothesis_col, origin);
    std::optional<std::size_t> label_idx;
    if (labeled) label_idx = require_column(table, schema.label_col, origin);

    Dataset ds;
    ds.store = store ? std::move(store) : std::make_shared<SentenceStore>();
    ds.pairs.reserve(table.rows.size());

    std::unordered_set<std::string> seen_ids;
    seen_ids.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        PairRecord pr;
        pr.row_id = row[id_idx];
        if (!seen_ids.insert(pr.row_id).second)
            throw DataError(origin + ": duplicate row_id '" + pr.row_id + "' at row " +
                            std::to_string(r + 1));
        pr.premise = ds.store->intern(row[premise_idx]);
        pr.hypothesis = ds.store->intern(row[hypothesis_idx]);
        if (label_idx) {
            const std::string& raw = row[*label_idx];
            if (!raw.empty()) {
                auto l = parse_label(raw);
                if (!l)
                    throw DataError(origin + ": unknown label '" + raw + "' at row " +
                                    std::to_string(r + 1));
                pr.label = *l;
            }
        }
        ds.pairs.push_back(std::move(pr));
    }
    return ds;
}

void save_pairs(const std::filesystem::path& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    bool any_label = false;
    for (const auto& pr : ds.pairs)
        if (pr.label) any_label = true;

    std::vector<std::string> row;
    row = {"id", "title1", "title2"};
    if (any_label) row.push_back("label");
    csv::write_row(out, row);

    for (const auto& pr : ds.pairs) {
        row = {pr.row_id, ds.store->text(pr.premise), ds.store->text(pr.hypothesis)};
        if (any_label) row.push_back(pr.label ? std::string(label_name(*pr.label)) : std::string());
        csv::write_row(out, row);
    }
}

DatasetStats dataset_stats(const Dataset& a, const Dataset* b) {
    DatasetStats st;
    st.n_pairs = a.pairs.size();
    std::unordered_set<SentenceId> distinct;
    for (const auto& pr : a.pairs) {
        if (pr.label)
            ++st.label_counts[class_index(*pr.label)];
        else
            ++st.n_unlabeled;
        distinct.insert(pr.premise);
        distinct.insert(pr.hypothesis);
    }
    st.n_distinct_sentences = distinct.size();
    if (b) {
        // Overlap of the sentences the pairs use; works whether or not the
        // two datasets share a store.
        std::unordered_set<std::string> a_texts;
        a_texts.reserve(distinct.size());
        for (SentenceId id : distinct) a_texts.insert(a.store->text(id));
        std::unordered_set<SentenceId> b_used;
        for (const auto& pr : b->pairs) {
            b_used.insert(pr.premise);
            b_used.insert(pr.hypothesis);
        }
        std::size_t shared = 0;
        for (SentenceId id : b_used)
            if (a_texts.count(b->store->text(id))) ++shared;
        st.shared_sentences = shared;
    }
    return st;
}

std::string dataset_stats_json(const DatasetStats& stats) {
    nlohmann::ordered_json j;
    j["n_pairs"] = stats.n_pairs;
    j["agreed"] = stats.label_counts[0];
    j["disagreed"] = stats.label_counts[1];
    j["unrelated"] = stats.label_counts[2];
    j["unlabeled"] = stats.n_unlabeled;
    j["distinct_sentences"] = stats.n_distinct_sentences;
    if (stats.shared_sentences) j["shared_sentences"] = *stats.shared_sentences;
    return j.dump(2) + "\n";
}

namespace {

constexpr double kSumTolerance = 1e-3;
constexpr double kRenormThreshold = 1e-9;

ProbVector parse_prob_row(const std::vector<std::string>& row,
                          const std::array<std::size_t, kNumClasses>& col,
                          const std::string& origin, std::size_t row_no) {
    ProbVector v;
    const std::string ctx = origin + ": row " + std::to_string(row_no);
    for (std::size_t k = 0; k < kNumClasses; ++k) {
        double x = parse_double(row[col[k]], ctx);
        if (!std::isfinite(x)) throw DataError(ctx + ": non-finite probability");
        if (x < 0.0) throw DataError(ctx + ": negative probability " + format_double(x));
        v[k] = x;
    }
    const double sum = v[0] + v[1] + v[2];
    if (std::fabs(sum - 1.0) > kSumTolerance)
        throw DataError(ctx + ": probabilities sum to " + format_double(sum) +
                        ", outside tolerance " + format_double(kSumTolerance));
    if (std::fabs(sum - 1.0) > kRenormThreshold) v = renormalized(v);
    return v;
}

}  // namespace

ProbList load_predictions(const std::filesystem::path& path) {
    const csv::Table table = csv::read_file(path);
    const std::string origin = path.string();
    const std::size_t id_idx = require_column(table, "id", origin);
    const std::array<std::size_t, kNumClasses> col{require_column(table, "p_agreed", origin),
                                                   require_column(table, "p_disagreed", origin),
                                                   require_column(table, "p_unrelated", origin)};

    ProbList out;
    out.reserve(table.rows.size());
    std::unordered_set<std::string> seen;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (!seen.insert(row[id_idx]).second)
            throw DataError(origin + ": duplicate row_id '" + row[id_idx] + "' at row " +
                            std::to_string(r + 1));
        out.emplace_back(row[id_idx], parse_prob_row(row, col, origin, r + 1));
    }
    return out;
}

void save_predictions(const std::filesystem::path& path, const ProbList& preds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    csv::write_row(out, {"id", "p_agreed", "p_disagreed", "p_unrelated"});
    for (const auto& [id, v] : preds)
        csv::write_row(out, {id, format_double(v[0]), format_double(v[1]), format_double(v[2])});
}

LabelList load_labels(const std::filesystem::path& path) {
    const csv::Table table = csv::read_file(path);
    const std::string origin = path.string();
    const std::size_t id_idx = require_column(table, "id", origin);
    const std::size_t label_idx = require_column(table, "label", origin);

    LabelList out;
    out.reserve(table.rows.size());
    std::unordered_set<std::string> seen;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (!seen.insert(row[id_idx]).second)
            throw DataError(origin + ": duplicate row_id '" + row[id_idx] + "' at row " +
                            std::to_string(r + 1));
        auto l = parse_label(row[label_idx]);
        if (!l)
            throw DataError(origin + ": unknown label '" + row[label_idx] + "' at row " +
                            std::to_string(r + 1));
        out.emplace_back(row[id_idx], *l);
    }
    return out;
}

void save_labels(const std::filesystem::path& path, const LabelList& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    csv::write_row(out, {"id", "label"});
    for (const auto& [id, l] : rows) csv::write_row(out, {id, std::string(label_name(l))});
}

std::vector<std::string> load_id_list(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) ids.push_back(line);
    }
    return ids;
}

}  // namespace stance
