#include "support/generators.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>

#include "stance/error.hpp"

namespace stance::testing {

namespace fs = std::filesystem;

Dataset make_dataset(std::size_t n_sentences, const std::vector<LabeledRow>& rows,
                     const std::string& id_prefix) {
    Dataset ds;
    ds.store = std::make_shared<SentenceStore>();
    for (std::size_t i = 0; i < n_sentences; ++i) ds.store->intern("s" + std::to_string(i));
    ds.pairs.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& [a, b, label] = rows[i];
        ds.pairs.push_back(PairRecord{id_prefix + std::to_string(i), a, b, label});
    }
    return ds;
}

Dataset make_queries(std::shared_ptr<SentenceStore> store, const std::vector<IdPair>& pairs,
                     const std::string& id_prefix) {
    Dataset ds;
    ds.store = std::move(store);
    ds.pairs.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i)
        ds.pairs.push_back(
            PairRecord{id_prefix + std::to_string(i), pairs[i].first, pairs[i].second, std::nullopt});
    return ds;
}

EdgeSet random_edges(Rng& rng, std::size_t max_nodes, std::size_t max_edges) {
    EdgeSet e;
    e.n_nodes = 2 + rng.bounded(max_nodes - 1);
    const std::size_t n_edges = rng.bounded(max_edges + 1);
    for (std::size_t k = 0; k < n_edges; ++k) {
        const auto a = static_cast<SentenceId>(rng.bounded(e.n_nodes));
        auto b = static_cast<SentenceId>(rng.bounded(e.n_nodes));
        if (a == b) continue;
        if (rng.bounded(2) == 0)
            e.agree.push_back(ordered_pair(a, b));
        else
            e.disagree.push_back(ordered_pair(a, b));
    }
    return e;
}

Dataset dataset_from_edges(const EdgeSet& edges) {
    std::vector<LabeledRow> rows;
    rows.reserve(edges.agree.size() + edges.disagree.size());
    for (const auto& [a, b] : edges.agree) rows.emplace_back(a, b, Label::Agreed);
    for (const auto& [a, b] : edges.disagree) rows.emplace_back(a, b, Label::Disagreed);
    return make_dataset(edges.n_nodes, rows);
}

Label GroundTruth::label_of(SentenceId a, SentenceId b) const {
    const std::size_t ca = class_of[a];
    const std::size_t cb = class_of[b];
    if (ca == cb) return Label::Agreed;
    if (related.count(std::minmax(ca, cb))) return Label::Disagreed;
    return Label::Unrelated;
}

GroundTruth random_truth(Rng& rng, std::size_t n_nodes) {
    GroundTruth truth;
    truth.class_of.resize(n_nodes);
    // Nodes 0..2 share class 0; node 3 is in class 1, related to class 0.
    const std::size_t n_classes = 2 + rng.bounded(std::max<std::size_t>(n_nodes / 3, 1));
    truth.class_of[0] = truth.class_of[1] = truth.class_of[2] = 0;
    truth.class_of[3] = 1;
    for (std::size_t i = 4; i < n_nodes; ++i) truth.class_of[i] = rng.bounded(n_classes);
    truth.related.insert({0, 1});
    for (std::size_t p = 0; p < n_classes; ++p)
        for (std::size_t q = p + 1; q < n_classes; ++q)
            if (rng.uniform01() < 0.4) truth.related.insert({p, q});
    return truth;
}

Dataset sample_truth_dataset(Rng& rng, const GroundTruth& truth, double density) {
    const std::size_t n = truth.class_of.size();
    std::set<IdPair> chosen;
    // Planted positive instance: the class-0 triangle. Planted negative
    // instance: node 3 against two class-0 members.
    chosen.insert({0, 1});
    chosen.insert({1, 2});
    chosen.insert({0, 2});
    chosen.insert({0, 3});
    chosen.insert({1, 3});
    for (SentenceId a = 0; a < n; ++a)
        for (SentenceId b = a + 1; b < n; ++b)
            if (rng.uniform01() < density) chosen.insert({a, b});

    std::vector<LabeledRow> rows;
    rows.reserve(chosen.size());
    for (const auto& [a, b] : chosen) rows.emplace_back(a, b, truth.label_of(a, b));
    return make_dataset(n, rows);
}

namespace {

// One model's probability vector for a row: confidently right or confidently
// wrong, with the leftover mass split randomly between the other classes.
ProbVector model_vector(Rng& rng, Label gold, bool wrong) {
    const std::size_t y = class_index(gold);
    std::size_t top = y;
    double conf;
    if (wrong) {
        top = (y + 1 + rng.bounded(2)) % 3;
        conf = rng.uniform(0.55, 0.7);
    } else {
        conf = rng.uniform(0.7, 0.95);
    }
    const double u = rng.uniform01();
    ProbVector v;
    v[top] = conf;
    const std::size_t o1 = top == 0 ? 1 : 0;
    const std::size_t o2 = top == 2 ? 1 : 2;
    v[o1] = (1.0 - conf) * u;
    v[o2] = (1.0 - conf) * (1.0 - u);
    return v;
}

}  // namespace

StackingData synthetic_stacking_data(std::uint64_t seed, std::size_t n_models, std::size_t n_rows,
                                     const std::string& id_prefix) {
    Rng rng(seed);
    StackingData data;
    data.features.n_cols = 3 * n_models;
    data.features.row_ids.reserve(n_rows);
    data.features.values.reserve(n_rows * data.features.n_cols);
    for (std::size_t r = 0; r < n_rows; ++r) {
        const auto label = static_cast<Label>(rng.bounded(3));
        data.labels.push_back(label);
        data.soft_targets.push_back(one_hot(label));
        data.features.row_ids.push_back(id_prefix + std::to_string(r));
        for (std::size_t m = 0; m < n_models; ++m) {
            const ProbVector v = model_vector(rng, label, r % n_models == m);
            data.features.values.push_back(v[0]);
            data.features.values.push_back(v[1]);
            data.features.values.push_back(v[2]);
        }
    }
    return data;
}

BlendFixture blend_weight_fixture(int hundredths) {
    BlendFixture fx;
    fx.target_weight = hundredths / 100.0;

    // A row whose class-0-vs-class-1 margin under blending is 0.5 * (w - t):
    // gold class 0 makes it correct above the threshold, gold class 1 below.
    auto margin_row = [&](const std::string& id, double t, Label gold) {
        const double a0 = (1.0 + 0.5 * (1.0 - t)) / 2.0;
        const double b0 = (1.0 - 0.5 * t) / 2.0;
        fx.a.emplace_back(id, ProbVector{{a0, 1.0 - a0, 0.0}});
        fx.b.emplace_back(id, ProbVector{{b0, 1.0 - b0, 0.0}});
        fx.gold.emplace_back(id, gold);
    };
    if (hundredths > 0) margin_row("needs_high", (hundredths - 0.5) / 100.0, Label::Agreed);
    if (hundredths < 100) margin_row("needs_low", (hundredths + 0.5) / 100.0, Label::Disagreed);
    for (int k = 0; k < 2; ++k) {
        const std::string id = "easy" + std::to_string(k);
        fx.a.emplace_back(id, one_hot(Label::Unrelated));
        fx.b.emplace_back(id, one_hot(Label::Unrelated));
        fx.gold.emplace_back(id, Label::Unrelated);
    }
    return fx;
}

PipelineFixture write_pipeline_fixture(const fs::path& dir, std::uint64_t seed,
                                       std::size_t n_models) {
    Rng rng(seed);
    fs::create_directories(dir);

    // Train sentences grouped into agreement classes.
    const std::size_t n_classes = 16;
    std::vector<std::vector<SentenceId>> classes(n_classes);
    std::vector<std::size_t> class_of;
    for (std::size_t k = 0; k < n_classes; ++k) {
        const std::size_t size = 2 + rng.bounded(5);
        for (std::size_t j = 0; j < size; ++j) {
            classes[k].push_back(static_cast<SentenceId>(class_of.size()));
            class_of.push_back(k);
        }
    }
    const std::size_t n_train_sentences = class_of.size();

    std::set<std::pair<std::size_t, std::size_t>> related;
    for (std::size_t p = 0; p < n_classes; ++p)
        for (std::size_t q = p + 1; q < n_classes; ++q)
            if (rng.uniform01() < 0.25) related.insert({p, q});

    // Train rows, all consistent with the class structure.
    std::set<IdPair> used;
    std::vector<LabeledRow> train_rows;
    auto add_row = [&](SentenceId a, SentenceId b, Label l) {
        if (a == b) return;
        if (!used.insert(ordered_pair(a, b)).second) return;
        train_rows.emplace_back(a, b, l);
    };
    for (const auto& members : classes)
        for (std::size_t j = 1; j < members.size(); ++j)
            add_row(members[j - 1], members[j], Label::Agreed);  // spanning path
    for (std::size_t k = 0; k < 24; ++k) {
        const auto& members = classes[rng.bounded(n_classes)];
        add_row(members[rng.bounded(members.size())], members[rng.bounded(members.size())],
                Label::Agreed);
    }
    for (const auto& [p, q] : related) {
        add_row(classes[p][rng.bounded(classes[p].size())],
                classes[q][rng.bounded(classes[q].size())], Label::Disagreed);
    }
    std::size_t unrelated_added = 0;
    while (unrelated_added < 40) {
        const std::size_t p = rng.bounded(n_classes);
        const std::size_t q = rng.bounded(n_classes);
        if (p == q || related.count(std::minmax(p, q))) continue;
        const std::size_t before = train_rows.size();
        add_row(classes[p][rng.bounded(classes[p].size())],
                classes[q][rng.bounded(classes[q].size())], Label::Unrelated);
        if (train_rows.size() > before) ++unrelated_added;
    }

    auto store = std::make_shared<SentenceStore>();
    for (std::size_t i = 0; i < n_train_sentences; ++i) store->intern("s" + std::to_string(i));

    Dataset train;
    train.store = store;
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
        const auto& [a, b, l] = train_rows[i];
        train.pairs.push_back(PairRecord{"r" + std::to_string(i), a, b, l});
    }

    // Test rows: derivable agreed/disagreed pairs, unrelated pairs, and pairs
    // of fresh sentences nothing can derive.
    struct TestRow {
        SentenceId a, b;
        Label gold;
    };
    std::vector<TestRow> test_rows;
    auto pick_two = [&](const std::vector<SentenceId>& members) {
        const std::size_t i = rng.bounded(members.size());
        std::size_t j = rng.bounded(members.size() - 1);
        if (j >= i) ++j;
        return std::pair(members[i], members[j]);
    };
    for (std::size_t k = 0; k < 40; ++k) {
        const auto& members = classes[rng.bounded(n_classes)];
        auto [a, b] = pick_two(members);
        test_rows.push_back({a, b, Label::Agreed});
    }
    {
        std::vector<std::pair<std::size_t, std::size_t>> rel(related.begin(), related.end());
        for (std::size_t k = 0; k < 20; ++k) {
            const auto& [p, q] = rel[rng.bounded(rel.size())];
            test_rows.push_back({classes[p][rng.bounded(classes[p].size())],
                                 classes[q][rng.bounded(classes[q].size())], Label::Disagreed});
        }
    }
    std::size_t unrelated_tests = 0;
    while (unrelated_tests < 30) {
        const std::size_t p = rng.bounded(n_classes);
        const std::size_t q = rng.bounded(n_classes);
        if (p == q || related.count(std::minmax(p, q))) continue;
        test_rows.push_back({classes[p][rng.bounded(classes[p].size())],
                             classes[q][rng.bounded(classes[q].size())], Label::Unrelated});
        ++unrelated_tests;
    }
    for (std::size_t k = 0; k < 30; ++k) {
        const SentenceId a = store->intern("t" + std::to_string(2 * k));
        const SentenceId b = store->intern("t" + std::to_string(2 * k + 1));
        test_rows.push_back({a, b, static_cast<Label>(rng.bounded(3))});
    }

    Dataset test;
    test.store = store;
    LabelList gold;
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
        const std::string id = "q" + std::to_string(i);
        test.pairs.push_back(PairRecord{id, test_rows[i].a, test_rows[i].b, std::nullopt});
        gold.emplace_back(id, test_rows[i].gold);
    }

    PipelineFixture fx;
    fx.n_test_rows = test.pairs.size();
    fx.train = dir / "train.csv";
    fx.test = dir / "test.csv";
    fx.gold_test = dir / "gold_test.csv";
    fx.val_ids = dir / "val_ids.txt";
    save_pairs(fx.train, train);
    save_pairs(fx.test, test);
    save_labels(fx.gold_test, gold);
    {
        std::ofstream out(fx.val_ids);
        for (std::size_t i = 0; i < train.pairs.size(); i += 4) out << train.pairs[i].row_id << "\n";
    }

    // Per-model prediction files: model m is wrong exactly on rows with
    // index % n_models == m; the external model errs on index % 7 == 3.
    auto write_preds = [&](const fs::path& path, const Dataset& ds, const LabelList* gold_rows,
                           auto wrong_fn) {
        ProbList preds;
        for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
            const Label y = gold_rows ? (*gold_rows)[i].second : *ds.pairs[i].label;
            preds.emplace_back(ds.pairs[i].row_id, model_vector(rng, y, wrong_fn(i)));
        }
        save_predictions(path, preds);
        return preds;
    };

    double best_single = 0.0;
    for (std::size_t m = 0; m < n_models; ++m) {
        const fs::path train_path = dir / ("model" + std::to_string(m) + "_train.csv");
        const fs::path test_path = dir / ("model" + std::to_string(m) + "_test.csv");
        write_preds(train_path, train, nullptr, [&](std::size_t i) { return i % n_models == m; });
        const ProbList test_preds =
            write_preds(test_path, test, &gold, [&](std::size_t i) { return i % n_models == m; });
        std::size_t correct = 0;
        for (std::size_t i = 0; i < test_preds.size(); ++i)
            if (test_preds[i].second.argmax() == gold[i].second) ++correct;
        best_single = std::max(best_single,
                               static_cast<double>(correct) / static_cast<double>(test_preds.size()));
        fx.preds_train.push_back(train_path);
        fx.preds_test.push_back(test_path);
    }
    fx.external_train = dir / "external_train.csv";
    fx.external_test = dir / "external_test.csv";
    write_preds(fx.external_train, train, nullptr, [](std::size_t i) { return i % 7 == 3; });
    write_preds(fx.external_test, test, &gold, [](std::size_t i) { return i % 7 == 3; });

    // Second-level models err half as often.
    for (std::size_t m = 0; m < n_models; ++m) {
        const fs::path train_path = dir / ("second" + std::to_string(m) + "_train.csv");
        const fs::path test_path = dir / ("second" + std::to_string(m) + "_test.csv");
        auto wrong = [&](std::size_t i) { return i % (2 * n_models) == 2 * m; };
        write_preds(train_path, train, nullptr, wrong);
        write_preds(test_path, test, &gold, wrong);
        fx.second_preds_train.push_back(train_path);
        fx.second_preds_test.push_back(test_path);
    }
    fx.second_external_train = dir / "second_external_train.csv";
    fx.second_external_test = dir / "second_external_test.csv";
    write_preds(fx.second_external_train, train, nullptr, [](std::size_t i) { return i % 11 == 5; });
    write_preds(fx.second_external_test, test, &gold, [](std::size_t i) { return i % 11 == 5; });

    fx.best_single_model_test_accuracy = best_single;
    return fx;
}

}  // namespace stance::testing
