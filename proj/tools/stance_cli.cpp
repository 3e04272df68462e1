// Command-line front end for the stance pipeline library: ingestion, the
// transitivity tools, stacking/blending, pseudo-labels, and the end-to-end
// pipeline. Exit codes: 0 success, 1 usage, 2 data error, 3 internal
// consistency failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "stance/blending.hpp"
#include "stance/csv.hpp"
#include "stance/dataset.hpp"
#include "stance/ensemble.hpp"
#include "stance/error.hpp"
#include "stance/pipeline.hpp"
#include "stance/pseudo_label.hpp"
#include "stance/relation_graph.hpp"
#include "stance/transitive.hpp"

namespace fs = std::filesystem;
using namespace stance;

namespace {

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << text;
}

// Gold labels come either as an id,label file or as a labeled pair file.
LabelList load_gold(const fs::path& path, const PairSchema& schema) {
    const csv::Table probe = csv::read_file(path);
    const bool pair_file =
        probe.column(schema.premise_col).has_value() && probe.column(schema.hypothesis_col).has_value();
    if (!pair_file) return load_labels(path);

    const Dataset ds = load_pairs(path, schema, true);
    LabelList gold;
    gold.reserve(ds.pairs.size());
    for (const auto& pr : ds.pairs) {
        if (!pr.label) throw DataError(path.string() + ": gold row '" + pr.row_id + "' is unlabeled");
        gold.emplace_back(pr.row_id, *pr.label);
    }
    return gold;
}

struct CommonOpts {
    std::string schema = "minimal";
    std::uint64_t seed = 1;
    double grid_step = 0.01;
    std::size_t cap = 100000000;
    bool strict = false;
    fs::path out_dir = ".";

    // Output files land under --out-dir unless given as absolute paths.
    fs::path out(const fs::path& p) const {
        const fs::path resolved = p.is_absolute() ? p : out_dir / p;
        if (resolved.has_parent_path()) fs::create_directories(resolved.parent_path());
        return resolved;
    }
};

int run(CLI::App& app, int argc, char** argv) {
    CommonOpts common;
    app.add_option("--schema", common.schema, "Pair-file column mapping: minimal, wsdm, or id=..,premise=..,hypothesis=..[,label=..]")
        ->capture_default_str();
    app.add_option("--seed", common.seed, "Seed for every stochastic step")->capture_default_str();
    app.add_option("--out-dir", common.out_dir, "Directory for output files")->capture_default_str();
    app.add_option("--grid-step", common.grid_step, "Blend weight grid step")->capture_default_str();
    app.add_option("--cap", common.cap, "Derived-pair cap for closure and augmentation")
        ->capture_default_str();
    app.add_flag("--strict", common.strict, "Turn warnings (dropped self-pairs, truncation) into errors");
    app.fallthrough();
    app.require_subcommand(1);

    // --- ingest ---
    auto* ingest = app.add_subcommand("ingest", "Validate and canonicalize a pair file");
    fs::path ingest_input, ingest_output, ingest_stats, ingest_compare;
    bool ingest_labeled = false;
    ingest->add_option("--input", ingest_input, "Pair file")->required();
    ingest->add_option("--output", ingest_output, "Canonical output file")->required();
    ingest->add_flag("--labeled", ingest_labeled, "Input carries a label column");
    ingest->add_option("--stats", ingest_stats, "Write a stats report here");
    ingest->add_option("--compare", ingest_compare, "Second pair file for sentence-overlap stats");
    ingest->callback([&] {
        const PairSchema schema = PairSchema::parse(common.schema);
        auto store = std::make_shared<SentenceStore>();
        const Dataset ds = load_pairs(ingest_input, schema, ingest_labeled, store);
        std::optional<Dataset> other;
        if (!ingest_compare.empty()) other = load_pairs(ingest_compare, schema, false);
        save_pairs(common.out(ingest_output), ds);
        const DatasetStats stats = dataset_stats(ds, other ? &*other : nullptr);
        if (!ingest_stats.empty()) write_text_file(common.out(ingest_stats), dataset_stats_json(stats));
        std::cout << "ingested " << stats.n_pairs << " pairs, " << stats.n_distinct_sentences
                  << " distinct sentences";
        if (stats.shared_sentences) std::cout << ", " << *stats.shared_sentences << " shared";
        std::cout << "\n";
    });

    // --- audit ---
    auto* audit = app.add_subcommand("audit", "Check the two transitivity rules on labeled data");
    fs::path audit_train, audit_report;
    audit->add_option("--train", audit_train, "Labeled pair file")->required();
    audit->add_option("--report", audit_report, "Report file (JSON)");
    audit->callback([&] {
        const PairSchema schema = PairSchema::parse(common.schema);
        const Dataset ds = load_pairs(audit_train, schema, true);
        const AuditReport report = audit_consistency(ds);
        const RelationGraph graph = build_graph(ds);
        if (graph.self_pairs_dropped > 0) {
            if (common.strict)
                throw DataError(std::to_string(graph.self_pairs_dropped) +
                                " self-pairs in input (strict mode)");
            std::cerr << "warning: dropped " << graph.self_pairs_dropped << " self-pairs\n";
        }
        const auto conflicts = detect_conflicts(graph);
        const std::string json = audit_report_json(report, conflicts, ds.store.get());
        if (!audit_report.empty())
            write_text_file(common.out(audit_report), json);
        else
            std::cout << json;
        auto fmt_rate = [](std::optional<double> r) {
            return r ? std::to_string(*r) : std::string("n/a");
        };
        std::cout << "positive " << report.positive_held << "/" << report.positive_triples << " ("
                  << fmt_rate(report.positive_rate()) << "), negative " << report.negative_held
                  << "/" << report.negative_triples << " (" << fmt_rate(report.negative_rate())
                  << "), conflicts " << conflicts.size() << "\n";
    });

    // --- closure ---
    auto* closure = app.add_subcommand("closure", "Enumerate every derivable pair");
    fs::path closure_train, closure_output;
    closure->add_option("--train", closure_train, "Labeled pair file")->required();
    closure->add_option("--output", closure_output, "Output file (title1,title2,label)")->required();
    closure->callback([&] {
        const PairSchema schema = PairSchema::parse(common.schema);
        const Dataset ds = load_pairs(closure_train, schema, true);
        const auto pairs = enumerate_closure(build_graph(ds), common.cap);
        const fs::path closure_path = common.out(closure_output);
        std::ofstream out(closure_path, std::ios::binary);
        if (!out) throw DataError("cannot write file: " + closure_path.string());
        csv::write_row(out, {"title1", "title2", "label"});
        for (const auto& cp : pairs)
            csv::write_row(out, {ds.store->text(cp.a), ds.store->text(cp.b),
                                 std::string(label_name(cp.label))});
        std::cout << "closure holds " << pairs.size() << " pairs\n";
    });

    // --- predict-transitive ---
    auto* ptrans = app.add_subcommand("predict-transitive", "Answer test rows from the closure");
    fs::path pt_train, pt_test, pt_output;
    bool pt_keep_conflicted = false;
    ptrans->add_option("--train", pt_train, "Labeled pair file")->required();
    ptrans->add_option("--test", pt_test, "Query pair file")->required();
    ptrans->add_option("--output", pt_output, "Output id,label file")->required();
    ptrans->add_flag("--keep-conflicted", pt_keep_conflicted,
                     "Also answer queries touching conflicted classes");
    ptrans->callback([&] {
        const PairSchema schema = PairSchema::parse(common.schema);
        auto store = std::make_shared<SentenceStore>();
        const Dataset train = load_pairs(pt_train, schema, true, store);
        const Dataset test = load_pairs(pt_test, schema, false, store);
        const auto preds = predict_pairs(train, test, !pt_keep_conflicted);
        save_transitive(common.out(pt_output), preds);
        std::cout << "derivable rows: " << preds.size() << "\n";
    });

    // --- augment ---
    auto* augment_cmd = app.add_subcommand("augment", "Emit new pairs derivable from the closure");
    fs::path aug_train, aug_output;
    augment_cmd->add_option("--train", aug_train, "Labeled pair file")->required();
    augment_cmd->add_option("--output", aug_output, "Output file (title1,title2,label)")->required();
    augment_cmd->callback([&] {
        const PairSchema schema = PairSchema::parse(common.schema);
        const Dataset ds = load_pairs(aug_train, schema, true);
        const AugmentResult result = augment(ds, common.cap);
        if (common.strict && result.truncated)
            throw DataError("augmentation truncated at cap " + std::to_string(common.cap) +
                            " of " + std::to_string(result.total_derivable) + " (strict mode)");
        save_augmented(common.out(aug_output), result, *ds.store);
        std::cout << "augmented pairs: " << result.pairs.size() << " of "
                  << result.total_derivable << (result.truncated ? " (truncated)" : "") << "\n";
    });

    // --- stack ---
    auto* stack = app.add_subcommand("stack", "Concatenate per-model probabilities into features");
    std::vector<fs::path> stack_preds;
    fs::path stack_output;
    stack->add_option("--preds", stack_preds, "Prediction files, one per model")->required();
    stack->add_option("--output", stack_output, "Feature file")->required();
    stack->callback([&] {
        std::vector<ProbList> outputs;
        for (const auto& p : stack_preds) outputs.push_back(load_predictions(p));
        const StackedFeatures feats = stack_features(align_predictions(outputs));
        save_features(common.out(stack_output), feats);
        std::cout << "stacked " << feats.n_rows() << " rows x " << feats.n_cols << " features\n";
    });

    // --- train-stacker ---
    auto* ts = app.add_subcommand("train-stacker", "Fit the stacker with early stopping");
    std::vector<fs::path> ts_preds;
    fs::path ts_train, ts_val_ids, ts_model_out, ts_report, ts_soft;
    TrainConfig ts_cfg;
    ts->add_option("--preds", ts_preds, "Prediction files over the training rows")->required();
    ts->add_option("--train", ts_train, "Labeled pair file supplying the targets")->required();
    ts->add_option("--soft-labels", ts_soft,
                   "Soft-label file overriding the one-hot fit targets (validation gold still "
                   "comes from --train)");
    ts->add_option("--val-ids", ts_val_ids, "Validation row ids, one per line")->required();
    ts->add_option("--model-out", ts_model_out, "Model file")->required();
    ts->add_option("--report", ts_report, "Training report (JSON)");
    ts->add_option("--lr", ts_cfg.learning_rate, "Learning rate")->capture_default_str();
    ts->add_option("--max-epochs", ts_cfg.max_epochs, "Epoch cap")->capture_default_str();
    ts->add_option("--patience", ts_cfg.patience, "Early-stopping patience")->capture_default_str();
    ts->add_option("--batch-size", ts_cfg.batch_size, "Mini-batch size")->capture_default_str();
    ts->add_option("--hidden", ts_cfg.hidden_width, "Hidden width (0 = linear)")
        ->capture_default_str();
    ts->callback([&] {
        ts_cfg.seed = common.seed;
        const PairSchema schema = PairSchema::parse(common.schema);
        const Dataset train = load_pairs(ts_train, schema, true);
        std::vector<ProbList> outputs;
        for (const auto& p : ts_preds) outputs.push_back(load_predictions(p));
        const StackedFeatures all = stack_features(align_predictions(outputs));

        const auto val_list = load_id_list(ts_val_ids);
        const std::unordered_set<std::string> val_ids(val_list.begin(), val_list.end());
        std::unordered_map<std::string, Label> label_by_id;
        for (const auto& pr : train.pairs) {
            if (!pr.label) throw DataError("unlabeled train row '" + pr.row_id + "'");
            label_by_id.emplace(pr.row_id, *pr.label);
        }
        std::unordered_map<std::string, ProbVector> soft_by_id;
        if (!ts_soft.empty()) {
            auto soft_store = std::make_shared<SentenceStore>();
            for (const auto& rec : load_soft_records(ts_soft, soft_store))
                soft_by_id.emplace(rec.row_id, rec.target);
        }

        StackedFeatures fit, val;
        fit.n_cols = val.n_cols = all.n_cols;
        std::vector<ProbVector> fit_targets;
        std::vector<Label> val_labels;
        for (std::size_t r = 0; r < all.n_rows(); ++r) {
            auto it = label_by_id.find(all.row_ids[r]);
            if (it == label_by_id.end())
                throw DataError("prediction row '" + all.row_ids[r] + "' is not a training row");
            auto row = all.row(r);
            if (val_ids.count(all.row_ids[r])) {
                val.row_ids.push_back(all.row_ids[r]);
                val.values.insert(val.values.end(), row.begin(), row.end());
                val_labels.push_back(it->second);
            } else {
                fit.row_ids.push_back(all.row_ids[r]);
                fit.values.insert(fit.values.end(), row.begin(), row.end());
                if (ts_soft.empty()) {
                    fit_targets.push_back(one_hot(it->second));
                } else {
                    auto soft = soft_by_id.find(all.row_ids[r]);
                    if (soft == soft_by_id.end())
                        throw DataError("no soft label for row '" + all.row_ids[r] + "'");
                    fit_targets.push_back(soft->second);
                }
            }
        }

        const StackerModel model = train_stacker(fit, fit_targets, val, val_labels, ts_cfg);
        save_stacker(common.out(ts_model_out), model);
        if (!ts_report.empty()) {
            nlohmann::ordered_json j;
            j["epochs_run"] = model.epochs_run;
            j["best_val_accuracy"] = model.best_val_accuracy;
            j["n_fit_rows"] = fit.n_rows();
            j["n_val_rows"] = val.n_rows();
            j["seed"] = model.seed;
            write_text_file(common.out(ts_report), j.dump(2) + "\n");
        }
        std::cout << "trained " << model.epochs_run << " epochs, best validation accuracy "
                  << model.best_val_accuracy << "\n";
    });

    // --- blend ---
    auto* blend_cmd = app.add_subcommand("blend", "Convex-combine two prediction files");
    fs::path blend_a, blend_b, blend_output;
    double blend_w = 0.5;
    blend_cmd->add_option("--a", blend_a, "First prediction file")->required();
    blend_cmd->add_option("--b", blend_b, "Second prediction file")->required();
    blend_cmd->add_option("--weight", blend_w, "Weight on the first file")->required();
    blend_cmd->add_option("--output", blend_output, "Blended prediction file")->required();
    blend_cmd->callback([&] {
        const ProbList a = load_predictions(blend_a);
        const ProbList b = load_predictions(blend_b);
        save_predictions(common.out(blend_output), blend(a, b, BlendSpec{blend_w}));
        std::cout << "blended " << a.size() << " rows at weight " << blend_w << "\n";
    });

    // --- search-weight ---
    auto* sw = app.add_subcommand("search-weight", "Grid-search the blend weight on gold labels");
    fs::path sw_a, sw_b, sw_gold, sw_report, sw_output;
    sw->add_option("--a", sw_a, "First prediction file")->required();
    sw->add_option("--b", sw_b, "Second prediction file")->required();
    sw->add_option("--gold", sw_gold, "Gold labels (id,label file or labeled pair file)")->required();
    sw->add_option("--report", sw_report, "Search report (JSON)");
    sw->add_option("--output", sw_output, "Write the blend at the optimum here");
    sw->callback([&] {
        const PairSchema schema = PairSchema::parse(common.schema);
        const ProbList a = load_predictions(sw_a);
        const ProbList b = load_predictions(sw_b);
        const LabelList gold = load_gold(sw_gold, schema);
        const WeightSearchResult result = search_blend_weight(a, b, gold, common.grid_step);
        if (!sw_report.empty()) {
            nlohmann::ordered_json j;
            j["weight"] = result.spec.w;
            j["accuracy"] = result.report.accuracy;
            j["n"] = result.report.n_rows;
            j["correct"] = result.report.n_correct;
            write_text_file(common.out(sw_report), j.dump(2) + "\n");
        }
        if (!sw_output.empty()) save_predictions(common.out(sw_output), blend(a, b, result.spec));
        std::cout << "best weight " << result.spec.w << " at accuracy " << result.report.accuracy
                  << "\n";
    });

    // --- pseudo ---
    auto* pseudo = app.add_subcommand("pseudo", "Build a soft pseudo-label corpus");
    fs::path ps_test, ps_preds, ps_output, ps_train, ps_val_ids;
    std::string ps_mode = "test-only";
    bool ps_harden = false;
    pseudo->add_option("--test", ps_test, "Test pair file")->required();
    pseudo->add_option("--preds", ps_preds, "Predictions over the test rows")->required();
    pseudo->add_option("--output", ps_output, "Soft-label file")->required();
    pseudo->add_option("--mode", ps_mode, "test-only or train-plus-test")->capture_default_str();
    pseudo->add_option("--train", ps_train, "Labeled pair file (train-plus-test mode)");
    pseudo->add_option("--val-ids", ps_val_ids, "Row ids to exclude from the corpus");
    pseudo->add_flag("--harden", ps_harden, "One-hot the targets");
    pseudo->callback([&] {
        const PairSchema schema = PairSchema::parse(common.schema);
        MergeMode mode;
        if (ps_mode == "test-only")
            mode = MergeMode::TestOnly;
        else if (ps_mode == "train-plus-test")
            mode = MergeMode::TrainPlusTest;
        else
            throw DataError("unknown pseudo mode '" + ps_mode + "'");
        if (mode == MergeMode::TrainPlusTest && ps_train.empty())
            throw DataError("train-plus-test mode needs --train");

        auto store = std::make_shared<SentenceStore>();
        Dataset train;
        if (!ps_train.empty()) train = load_pairs(ps_train, schema, true, store);
        const Dataset test = load_pairs(ps_test, schema, false, store);
        const ProbList preds = load_predictions(ps_preds);
        const auto soft = make_soft_labels(test, preds, ps_harden);

        std::unordered_set<std::string> exclude;
        if (!ps_val_ids.empty()) {
            const auto ids = load_id_list(ps_val_ids);
            exclude.insert(ids.begin(), ids.end());
        }
        std::vector<SoftRecord> records;
        if (mode == MergeMode::TrainPlusTest)
            records = merge(train, soft, mode, exclude.empty() ? nullptr : &exclude);
        else
            records = merge(Dataset{store, {}}, soft, mode, exclude.empty() ? nullptr : &exclude);
        save_soft_records(common.out(ps_output), records, *store);
        std::cout << "wrote " << records.size() << " soft records\n";
    });

    // --- evaluate ---
    auto* eval = app.add_subcommand("evaluate", "Score predictions against gold labels");
    fs::path ev_preds, ev_probs, ev_gold, ev_report;
    bool ev_balanced = false;
    auto* opt_preds = eval->add_option("--preds", ev_preds, "id,label prediction file");
    eval->add_option("--probs", ev_probs, "Probability file; the argmax is scored")
        ->excludes(opt_preds);
    eval->add_option("--gold", ev_gold, "Gold labels (id,label file or labeled pair file)")->required();
    eval->add_option("--report", ev_report, "Evaluation report (JSON)");
    eval->add_flag("--balanced", ev_balanced, "Also report the mean per-class recall");
    eval->callback([&] {
        const PairSchema schema = PairSchema::parse(common.schema);
        LabelList preds;
        if (!ev_preds.empty())
            preds = load_labels(ev_preds);
        else if (!ev_probs.empty())
            preds = argmax_labels(load_predictions(ev_probs));
        else
            throw CLI::RequiredError("evaluate needs --preds or --probs");
        const LabelList gold = load_gold(ev_gold, schema);
        const EvalReport report = evaluate_accuracy(preds, gold);
        const std::string json = eval_report_json(report, ev_balanced);
        if (!ev_report.empty())
            write_text_file(common.out(ev_report), json);
        else
            std::cout << json;
        std::cout << "accuracy " << report.n_correct << "/" << report.n_rows << " = "
                  << report.accuracy;
        if (ev_balanced) std::cout << ", balanced " << balanced_accuracy(report);
        std::cout << "\n";
    });

    // --- pipeline ---
    auto* pl = app.add_subcommand("pipeline", "Run every stage end to end");
    PipelineConfig cfg;
    double pl_weight = -1.0, pl_second_weight = -1.0;
    pl->add_option("--train", cfg.train_path, "Labeled pair file")->required();
    pl->add_option("--test", cfg.test_path, "Test pair file")->required();
    pl->add_option("--preds", cfg.model_preds_train, "First-level prediction files (train rows)")
        ->required();
    pl->add_option("--test-preds", cfg.model_preds_test,
                   "First-level prediction files (test rows)")
        ->required();
    pl->add_option("--external-train", cfg.external_preds_train,
                   "External model predictions over train rows")
        ->required();
    pl->add_option("--external-test", cfg.external_preds_test,
                   "External model predictions over test rows")
        ->required();
    pl->add_option("--second-preds", cfg.second_model_preds_train,
                   "Second-level prediction files (train rows)");
    pl->add_option("--second-test-preds", cfg.second_model_preds_test,
                   "Second-level prediction files (test rows)");
    pl->add_option("--second-external-train", cfg.second_external_preds_train,
                   "Second external predictions over train rows");
    pl->add_option("--second-external-test", cfg.second_external_preds_test,
                   "Second external predictions over test rows");
    pl->add_option("--val-ids", cfg.val_ids_path, "Validation row ids, one per line")->required();
    pl->add_option("--blend-weight", pl_weight, "Fix the level-1 blend weight (skips the search)");
    pl->add_option("--second-blend-weight", pl_second_weight, "Fix the level-2 blend weight");
    pl->add_option("--lr", cfg.stacker.learning_rate, "Stacker learning rate")->capture_default_str();
    pl->add_option("--max-epochs", cfg.stacker.max_epochs, "Stacker epoch cap")->capture_default_str();
    pl->add_option("--patience", cfg.stacker.patience, "Stacker patience")->capture_default_str();
    pl->add_option("--batch-size", cfg.stacker.batch_size, "Stacker batch size")->capture_default_str();
    pl->add_option("--hidden", cfg.stacker.hidden_width, "Stacker hidden width")->capture_default_str();
    pl->add_flag("--keep-conflicted", "Also overlay queries touching conflicted classes");
    pl->add_flag("--harden", cfg.harden_pseudo, "One-hot the pseudo-label targets");
    pl->callback([&] {
        cfg.schema = common.schema;
        cfg.grid_step = common.grid_step;
        cfg.out_dir = common.out_dir;
        cfg.stacker.seed = common.seed;
        cfg.skip_conflicted = pl->count("--keep-conflicted") == 0;
        if (pl_weight >= 0.0) cfg.fixed_blend_weight = pl_weight;
        if (pl_second_weight >= 0.0) cfg.second_fixed_blend_weight = pl_second_weight;
        const PipelineResult result = cmd_pipeline(cfg);
        std::cout << "pipeline done: " << result.n_test_rows << " rows, blend weight "
                  << result.blend_weight << " (val acc " << result.blend_val_accuracy << "), "
                  << result.n_transitive << " transitive rows, " << result.n_overridden
                  << " overridden\n"
                  << "final labels: " << result.final_labels_path.string() << "\n";
    });

    app.parse(argc, argv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stance pair pipeline: transitive label propagation, stacking, blending, "
                 "and pseudo-labels"};
    try {
        return run(app, argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const InternalError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
