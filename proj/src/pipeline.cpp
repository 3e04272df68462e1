#include "stance/pipeline.hpp"

#include <fstream>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "stance/blending.hpp"
#include "stance/csv.hpp"
#include "stance/error.hpp"
#include "stance/num_format.hpp"
#include "stance/pseudo_label.hpp"
#include "stance/relation_graph.hpp"
#include "stance/transitive.hpp"

namespace stance {

void save_features(const std::filesystem::path& path, const StackedFeatures& feats) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    std::vector<std::string> row;
    row.push_back("id");
    for (std::size_t c = 0; c < feats.n_cols; ++c) row.push_back("f" + std::to_string(c));
    csv::write_row(out, row);
    for (std::size_t r = 0; r < feats.n_rows(); ++r) {
        row.assign(1, feats.row_ids[r]);
        for (double v : feats.row(r)) row.push_back(format_double(v));
        csv::write_row(out, row);
    }
}

StackedFeatures load_features(const std::filesystem::path& path) {
    const csv::Table table = csv::read_file(path);
    const std::string origin = path.string();
    if (table.header.empty() || table.header[0] != "id")
        throw DataError(origin + ": feature files start with an id column");
    StackedFeatures f;
    f.n_cols = table.header.size() - 1;
    f.row_ids.reserve(table.rows.size());
    f.values.reserve(table.rows.size() * f.n_cols);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        f.row_ids.push_back(table.rows[r][0]);
        for (std::size_t c = 1; c < table.header.size(); ++c)
            f.values.push_back(
                parse_double(table.rows[r][c], origin + ": row " + std::to_string(r + 1)));
    }
    return f;
}

LabelList argmax_labels(const ProbList& preds) {
    LabelList out;
    out.reserve(preds.size());
    for (const auto& [id, v] : preds) out.emplace_back(id, v.argmax());
    return out;
}

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

json config_json(const PipelineConfig& c) {
    json j;
    j["train"] = c.train_path.string();
    j["test"] = c.test_path.string();
    j["schema"] = c.schema;
    auto paths = [](const std::vector<fs::path>& v) {
        json a = json::array();
        for (const auto& p : v) a.push_back(p.string());
        return a;
    };
    j["model_preds_train"] = paths(c.model_preds_train);
    j["model_preds_test"] = paths(c.model_preds_test);
    j["external_preds_train"] = c.external_preds_train.string();
    j["external_preds_test"] = c.external_preds_test.string();
    j["second_model_preds_train"] = paths(c.second_model_preds_train);
    j["second_model_preds_test"] = paths(c.second_model_preds_test);
    j["second_external_preds_train"] = c.second_external_preds_train.string();
    j["second_external_preds_test"] = c.second_external_preds_test.string();
    j["val_ids"] = c.val_ids_path.string();
    j["out_dir"] = c.out_dir.string();
    j["grid_step"] = c.grid_step;
    if (c.fixed_blend_weight) j["fixed_blend_weight"] = *c.fixed_blend_weight;
    if (c.second_fixed_blend_weight) j["second_fixed_blend_weight"] = *c.second_fixed_blend_weight;
    j["stacker"] = {{"learning_rate", c.stacker.learning_rate},
                    {"max_epochs", c.stacker.max_epochs},
                    {"patience", c.stacker.patience},
                    {"seed", c.stacker.seed},
                    {"batch_size", c.stacker.batch_size},
                    {"hidden_width", c.stacker.hidden_width}};
    j["skip_conflicted"] = c.skip_conflicted;
    j["harden_pseudo"] = c.harden_pseudo;
    return j;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << text;
}

void write_manifest(const fs::path& dir, const std::string& stage, const json& config,
                    const std::vector<std::string>& inputs, const std::vector<std::string>& outputs,
                    const json& metrics) {
    json j;
    j["stage"] = stage;
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    if (!metrics.is_null()) j["metrics"] = metrics;
    write_text(dir / "manifest.json", j.dump(2) + "\n");
}

ProbList filter_to_ids(const ProbList& preds, const std::unordered_set<std::string>& ids) {
    ProbList out;
    out.reserve(ids.size());
    for (const auto& row : preds)
        if (ids.count(row.first)) out.push_back(row);
    return out;
}

struct SplitFeatures {
    StackedFeatures fit;
    StackedFeatures val;
};

SplitFeatures split_by_ids(const StackedFeatures& all, const std::unordered_set<std::string>& val_ids) {
    SplitFeatures s;
    s.fit.n_cols = s.val.n_cols = all.n_cols;
    for (std::size_t r = 0; r < all.n_rows(); ++r) {
        StackedFeatures& dst = val_ids.count(all.row_ids[r]) ? s.val : s.fit;
        dst.row_ids.push_back(all.row_ids[r]);
        auto row = all.row(r);
        dst.values.insert(dst.values.end(), row.begin(), row.end());
    }
    return s;
}

void require_row_set(const StackedFeatures& feats, const Dataset& ds, const std::string& what) {
    std::unordered_set<std::string> ids;
    ids.reserve(ds.pairs.size());
    for (const auto& pr : ds.pairs) ids.insert(pr.row_id);
    if (feats.n_rows() != ids.size())
        throw DataError(what + " prediction files cover " + std::to_string(feats.n_rows()) +
                        " rows, dataset has " + std::to_string(ids.size()));
    for (const auto& id : feats.row_ids)
        if (!ids.count(id))
            throw DataError(what + " prediction files cover unknown row '" + id + "'");
}

// One stacking level: stack features, train with early stopping on the
// validation split, blend with the external predictions.
struct LevelOutcome {
    double stacker_val_accuracy = 0.0;
    double blend_weight = 0.0;
    double blend_val_accuracy = 0.0;
    ProbList blended_test;
};

struct LevelStageNames {
    std::string stack, stacker, blend;
};

LevelOutcome run_level(const fs::path& out_dir, const LevelStageNames& names, const json& cfg_json,
                       const PipelineConfig& config,
                       const std::vector<fs::path>& preds_train_paths,
                       const std::vector<fs::path>& preds_test_paths,
                       const fs::path& external_train_path, const fs::path& external_test_path,
                       const Dataset& train, const Dataset& test,
                       const std::unordered_set<std::string>& val_ids,
                       const LabelList& val_gold,
                       const std::optional<double>& fixed_weight) {
    if (preds_train_paths.size() != preds_test_paths.size())
        throw DataError("need the same model count for train and test prediction files");

    // --- stack ---
    std::vector<ProbList> outputs_train, outputs_test;
    std::vector<std::string> input_names;
    for (const auto& p : preds_train_paths) {
        outputs_train.push_back(load_predictions(p));
        input_names.push_back(p.string());
    }
    for (const auto& p : preds_test_paths) {
        outputs_test.push_back(load_predictions(p));
        input_names.push_back(p.string());
    }
    const StackedFeatures feats_train = stack_features(align_predictions(outputs_train));
    const StackedFeatures feats_test = stack_features(align_predictions(outputs_test));
    require_row_set(feats_train, train, "train");
    require_row_set(feats_test, test, "test");

    const fs::path stack_dir = out_dir / names.stack;
    fs::create_directories(stack_dir);
    save_features(stack_dir / "train_features.csv", feats_train);
    save_features(stack_dir / "test_features.csv", feats_test);
    write_manifest(stack_dir, names.stack, cfg_json, input_names,
                   {"train_features.csv", "test_features.csv"},
                   json{{"n_models", outputs_train.size()},
                        {"n_train_rows", feats_train.n_rows()},
                        {"n_test_rows", feats_test.n_rows()}});

    // --- train stacker ---
    const SplitFeatures split = split_by_ids(feats_train, val_ids);
    if (split.val.n_rows() != val_ids.size())
        throw DataError("validation ids missing from the training set");

    std::unordered_map<std::string, Label> train_label_by_id;
    for (const auto& pr : train.pairs) train_label_by_id.emplace(pr.row_id, *pr.label);
    std::vector<ProbVector> fit_targets;
    fit_targets.reserve(split.fit.n_rows());
    for (const auto& id : split.fit.row_ids) fit_targets.push_back(one_hot(train_label_by_id.at(id)));
    std::vector<Label> val_labels;
    val_labels.reserve(split.val.n_rows());
    for (const auto& id : split.val.row_ids) val_labels.push_back(train_label_by_id.at(id));

    const StackerModel model =
        train_stacker(split.fit, fit_targets, split.val, val_labels, config.stacker);

    const fs::path stacker_dir = out_dir / names.stacker;
    fs::create_directories(stacker_dir);
    save_stacker(stacker_dir / "model.txt", model);
    const ProbList stacker_val_preds = stacker_predict(model, split.val);
    const ProbList stacker_test_preds = stacker_predict(model, feats_test);
    save_predictions(stacker_dir / "val_preds.csv", stacker_val_preds);
    save_predictions(stacker_dir / "test_preds.csv", stacker_test_preds);
    write_manifest(stacker_dir, names.stacker, cfg_json,
                   {(stack_dir / "train_features.csv").string(),
                    (stack_dir / "test_features.csv").string()},
                   {"model.txt", "val_preds.csv", "test_preds.csv"},
                   json{{"epochs_run", model.epochs_run},
                        {"best_val_accuracy", model.best_val_accuracy}});

    // --- blend ---
    const ProbList external_train = load_predictions(external_train_path);
    const ProbList external_test = load_predictions(external_test_path);
    const ProbList external_val = filter_to_ids(external_train, val_ids);

    LevelOutcome outcome;
    outcome.stacker_val_accuracy = model.best_val_accuracy;
    WeightSearchResult search;
    if (fixed_weight) {
        search.spec.w = *fixed_weight;
        search.spec.validate();
        LabelList val_argmax = argmax_labels(blend(stacker_val_preds, external_val, search.spec));
        search.report = evaluate_accuracy(val_argmax, val_gold);
    } else {
        search = search_blend_weight(stacker_val_preds, external_val, val_gold, config.grid_step);
    }
    outcome.blend_weight = search.spec.w;
    outcome.blend_val_accuracy = search.report.accuracy;
    outcome.blended_test = blend(stacker_test_preds, external_test, search.spec);

    const fs::path blend_dir = out_dir / names.blend;
    fs::create_directories(blend_dir);
    save_predictions(blend_dir / "test_preds.csv", outcome.blended_test);
    json weight_report;
    weight_report["weight"] = search.spec.w;
    weight_report["weight_searched"] = !fixed_weight.has_value();
    weight_report["val_accuracy"] = search.report.accuracy;
    weight_report["val_n"] = search.report.n_rows;
    weight_report["val_correct"] = search.report.n_correct;
    write_text(blend_dir / "weight.json", weight_report.dump(2) + "\n");
    write_manifest(blend_dir, names.blend, cfg_json,
                   {(stacker_dir / "test_preds.csv").string(), external_test_path.string()},
                   {"test_preds.csv", "weight.json"}, weight_report);
    return outcome;
}

}  // namespace

PipelineResult cmd_pipeline(const PipelineConfig& config) {
    if (config.model_preds_train.empty())
        throw DataError("pipeline needs at least one first-level prediction file");
    if (config.out_dir.empty()) throw DataError("pipeline needs an output directory");
    const bool second_level = !config.second_model_preds_train.empty() ||
                              !config.second_model_preds_test.empty() ||
                              !config.second_external_preds_train.empty() ||
                              !config.second_external_preds_test.empty();
    if (second_level && (config.second_model_preds_train.empty() ||
                         config.second_model_preds_test.empty() ||
                         config.second_external_preds_train.empty() ||
                         config.second_external_preds_test.empty()))
        throw DataError("second-level runs need prediction files for train and test rows plus "
                        "both external files");
    fs::create_directories(config.out_dir);
    const json cfg_json = config_json(config);
    const PairSchema schema = PairSchema::parse(config.schema);

    auto store = std::make_shared<SentenceStore>();
    const Dataset train = load_pairs(config.train_path, schema, true, store);
    const Dataset test = load_pairs(config.test_path, schema, false, store);
    if (!train.fully_labeled())
        throw DataError(config.train_path.string() + ": training rows must all carry labels");

    std::unordered_set<std::string> val_ids;
    std::unordered_map<std::string, Label> train_label_by_id;
    for (const auto& pr : train.pairs) train_label_by_id.emplace(pr.row_id, *pr.label);
    LabelList val_gold;
    for (const auto& id : load_id_list(config.val_ids_path)) {
        if (!val_ids.insert(id).second) continue;
        auto it = train_label_by_id.find(id);
        if (it == train_label_by_id.end())
            throw DataError("validation id '" + id + "' is not a training row");
        val_gold.emplace_back(id, it->second);
    }
    if (val_ids.empty()) throw DataError("validation id list is empty");

    PipelineResult result;
    result.n_test_rows = test.pairs.size();

    // Level 1.
    const LevelOutcome level1 = run_level(
        config.out_dir, {"01_stack", "02_stacker", "03_blend"}, cfg_json, config,
        config.model_preds_train, config.model_preds_test, config.external_preds_train,
        config.external_preds_test, train, test, val_ids, val_gold, config.fixed_blend_weight);
    result.stacker_val_accuracy = level1.stacker_val_accuracy;
    result.blend_weight = level1.blend_weight;
    result.blend_val_accuracy = level1.blend_val_accuracy;

    // Pseudo-label corpora for the external fine-tuning step.
    {
        const fs::path pseudo_dir = config.out_dir / "04_pseudo";
        fs::create_directories(pseudo_dir);
        const auto soft = make_soft_labels(test, level1.blended_test, config.harden_pseudo);
        save_soft_records(pseudo_dir / "test_soft.csv", soft, *store);
        const auto merged = merge(train, soft, MergeMode::TrainPlusTest, &val_ids);
        save_soft_records(pseudo_dir / "train_plus_test_soft.csv", merged, *store);
        write_manifest(pseudo_dir, "pseudo", cfg_json,
                       {(config.out_dir / "03_blend" / "test_preds.csv").string()},
                       {"test_soft.csv", "train_plus_test_soft.csv"},
                       json{{"n_soft", soft.size()}, {"n_merged", merged.size()}});
    }

    // Level 2, when the fine-tuned predictions were supplied.
    ProbList final_probs = level1.blended_test;
    if (second_level) {
        const LevelOutcome level2 =
            run_level(config.out_dir, {"05_stack2", "06_stacker2", "07_blend2"}, cfg_json, config,
                      config.second_model_preds_train, config.second_model_preds_test,
                      config.second_external_preds_train, config.second_external_preds_test, train,
                      test, val_ids, val_gold, config.second_fixed_blend_weight);
        result.second_blend_weight = level2.blend_weight;
        result.second_blend_val_accuracy = level2.blend_val_accuracy;
        final_probs = level2.blended_test;
    }

    // Transitive overlay.
    const auto transitive = predict_pairs(train, test, config.skip_conflicted);
    result.n_transitive = transitive.size();
    {
        // Tripwire: two query rows for one sentence pair must agree.
        std::unordered_map<std::string, IdPair> pair_by_id;
        for (const auto& pr : test.pairs)
            pair_by_id.emplace(pr.row_id, ordered_pair(pr.premise, pr.hypothesis));
        std::map<IdPair, Label> label_by_pair;
        for (const auto& tp : transitive) {
            const IdPair pair = pair_by_id.at(tp.row_id);
            auto [it, inserted] = label_by_pair.emplace(pair, tp.label);
            if (!inserted && it->second != tp.label)
                throw InternalError("transitive predictions disagree on one sentence pair (rows "
                                    "including '" + tp.row_id + "')");
        }
    }

    const fs::path trans_dir = config.out_dir / "08_transitive";
    fs::create_directories(trans_dir);
    save_transitive(trans_dir / "predictions.csv", transitive);
    write_manifest(trans_dir, "transitive", cfg_json,
                   {config.train_path.string(), config.test_path.string()}, {"predictions.csv"},
                   json{{"n_derivable", transitive.size()}});

    const LabelList final_labels = overlay_predictions(final_probs, transitive);
    {
        const LabelList plain = argmax_labels(final_probs);
        std::size_t changed = 0;
        for (std::size_t i = 0; i < plain.size(); ++i)
            if (plain[i].second != final_labels[i].second) ++changed;
        result.n_overridden = changed;
    }

    const fs::path final_dir = config.out_dir / "09_final";
    fs::create_directories(final_dir);
    save_labels(final_dir / "labels.csv", final_labels);
    result.final_labels_path = final_dir / "labels.csv";

    json report;
    report["config"] = cfg_json;
    report["n_test_rows"] = result.n_test_rows;
    report["stacker_val_accuracy"] = result.stacker_val_accuracy;
    report["blend_weight"] = result.blend_weight;
    report["blend_val_accuracy"] = result.blend_val_accuracy;
    if (result.second_blend_weight) {
        report["second_blend_weight"] = *result.second_blend_weight;
        report["second_blend_val_accuracy"] = *result.second_blend_val_accuracy;
    }
    report["n_transitive"] = result.n_transitive;
    report["n_overridden"] = result.n_overridden;
    write_manifest(final_dir, "final", cfg_json, {}, {"labels.csv"},
                   json{{"n_transitive", result.n_transitive},
                        {"n_overridden", result.n_overridden}});
    write_text(config.out_dir / "pipeline_report.json", report.dump(2) + "\n");
    return result;
}

}  // namespace stance
