#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "stance/blending.hpp"
#include "stance/dataset.hpp"
#include "stance/pipeline.hpp"
#include "support/generators.hpp"
#include "support/temp_dir.hpp"

using namespace stance;
using namespace stance::testing;

namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args) {
    const std::string cmd = std::string(STANCE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file())
            files[fs::relative(entry.path(), root).string()] = slurp(entry.path());
    return files;
}

}  // namespace

TEST_CASE("audit subcommand") {
    TempDir tmp;
    write_file(tmp.file("train.csv"),
               "id,title1,title2,label\n"
               "r1,a,b,agreed\nr2,b,c,agreed\nr3,a,c,agreed\n"
               "r4,d,a,disagreed\nr5,d,b,disagreed\n");
    const fs::path report = tmp.file("report.json");
    CHECK(run_cli("audit --train " + tmp.file("train.csv").string() + " --report " +
                  report.string()) == 0);
    const std::string json = slurp(report);
    CHECK(json.find("\"positive_rate\": 1.0") != std::string::npos);
    CHECK(json.find("\"negative_rate\": 1.0") != std::string::npos);
    CHECK(json.find("\"conflicts\": []") != std::string::npos);

    write_file(tmp.file("typo.csv"), "id,title1,title2,label\nr1,a,b,agreeed\n");
    CHECK(run_cli("audit --train " + tmp.file("typo.csv").string()) == 2);

    // Three clean triangles (9 held triples) plus one spoiled one (1 violated).
    std::ostringstream ten;
    ten << "id,title1,title2,label\n";
    int row = 0;
    for (int base = 0; base < 12; base += 3) {
        const std::string x = "s" + std::to_string(base);
        const std::string y = "s" + std::to_string(base + 1);
        const std::string z = "s" + std::to_string(base + 2);
        ten << "r" << row++ << "," << x << "," << y << ",agreed\n";
        ten << "r" << row++ << "," << y << "," << z << ",agreed\n";
        ten << "r" << row++ << "," << x << "," << z << (base < 9 ? ",agreed\n" : ",unrelated\n");
    }
    write_file(tmp.file("ten.csv"), ten.str());
    const fs::path ten_report = tmp.file("ten.json");
    CHECK(run_cli("audit --train " + tmp.file("ten.csv").string() + " --report " +
                  ten_report.string()) == 0);
    const std::string ten_json = slurp(ten_report);
    CHECK(ten_json.find("\"positive_triples\": 10") != std::string::npos);
    CHECK(ten_json.find("\"positive_held\": 9") != std::string::npos);
    CHECK(ten_json.find("\"positive_rate\": 0.9") != std::string::npos);
}

TEST_CASE("predict-transitive subcommand") {
    TempDir tmp;
    write_file(tmp.file("train.csv"),
               "id,title1,title2,label\nr1,a,b,agreed\nr2,b,c,agreed\nr3,d,a,disagreed\n");

    SUBCASE("chain queries derive exactly") {
        write_file(tmp.file("test.csv"), "id,title1,title2\nq1,a,c\nq2,c,d\nq3,a,zz\n");
        const fs::path out = tmp.file("preds.csv");
        CHECK(run_cli("predict-transitive --train " + tmp.file("train.csv").string() + " --test " +
                      tmp.file("test.csv").string() + " --output " + out.string()) == 0);
        const LabelList preds = load_labels(out);
        REQUIRE(preds.size() == 2);
        CHECK(preds[0] == LabelRow{"q1", Label::Agreed});
        CHECK(preds[1] == LabelRow{"q2", Label::Disagreed});
    }
    SUBCASE("disjoint sentences derive nothing") {
        write_file(tmp.file("test.csv"), "id,title1,title2\nq1,xx,yy\n");
        const fs::path out = tmp.file("preds.csv");
        CHECK(run_cli("predict-transitive --train " + tmp.file("train.csv").string() + " --test " +
                      tmp.file("test.csv").string() + " --output " + out.string()) == 0);
        CHECK(load_labels(out).empty());
    }
    SUBCASE("missing input exits 2") {
        CHECK(run_cli("predict-transitive --train " + tmp.file("absent.csv").string() + " --test " +
                      tmp.file("absent2.csv").string() + " --output " +
                      tmp.file("o.csv").string()) == 2);
    }
}

TEST_CASE("usage errors exit 1") {
    CHECK(run_cli("") == 1);
    CHECK(run_cli("no-such-command") == 1);
    CHECK(run_cli("audit") == 1);  // missing required --train
    CHECK(run_cli("--help") == 0);
}

TEST_CASE("evaluate and search-weight subcommands") {
    TempDir tmp;
    write_file(tmp.file("gold.csv"), "id,label\nq1,agreed\nq2,disagreed\n");
    write_file(tmp.file("preds.csv"), "id,label\nq1,agreed\nq2,unrelated\n");
    const fs::path report = tmp.file("eval.json");
    CHECK(run_cli("evaluate --preds " + tmp.file("preds.csv").string() + " --gold " +
                  tmp.file("gold.csv").string() + " --report " + report.string()) == 0);
    CHECK(slurp(report).find("\"correct\": 1") != std::string::npos);

    write_file(tmp.file("a.csv"),
               "id,p_agreed,p_disagreed,p_unrelated\nq1,1,0,0\nq2,0,1,0\n");
    write_file(tmp.file("b.csv"),
               "id,p_agreed,p_disagreed,p_unrelated\nq1,0,1,0\nq2,0,1,0\n");
    const fs::path sw = tmp.file("sw.json");
    CHECK(run_cli("search-weight --a " + tmp.file("a.csv").string() + " --b " +
                  tmp.file("b.csv").string() + " --gold " + tmp.file("gold.csv").string() +
                  " --report " + sw.string()) == 0);
    CHECK(slurp(sw).find("\"accuracy\": 1.0") != std::string::npos);
}

TEST_CASE("pipeline runs end to end and beats the best single model") {
    TempDir tmp;
    const PipelineFixture fx = write_pipeline_fixture(tmp.file("fixture"), 404);

    PipelineConfig cfg;
    cfg.train_path = fx.train;
    cfg.test_path = fx.test;
    cfg.model_preds_train = fx.preds_train;
    cfg.model_preds_test = fx.preds_test;
    cfg.external_preds_train = fx.external_train;
    cfg.external_preds_test = fx.external_test;
    cfg.val_ids_path = fx.val_ids;
    cfg.out_dir = tmp.file("out");
    cfg.stacker.seed = 11;

    const PipelineResult result = cmd_pipeline(cfg);
    CHECK(result.n_test_rows == fx.n_test_rows);
    CHECK(result.n_transitive > 0);

    const LabelList final_labels = load_labels(result.final_labels_path);
    const LabelList gold = load_labels(fx.gold_test);
    const EvalReport eval = evaluate_accuracy(final_labels, gold);
    CHECK(eval.accuracy > fx.best_single_model_test_accuracy);

    SUBCASE("re-running writes byte-identical outputs") {
        const auto before = read_tree(tmp.file("out"));
        cmd_pipeline(cfg);  // same out_dir
        CHECK(read_tree(tmp.file("out")) == before);
    }

    SUBCASE("fixed weight 1.0 reduces to stacker argmax plus overrides") {
        cfg.out_dir = tmp.file("out_w1");
        cfg.fixed_blend_weight = 1.0;
        const PipelineResult degenerate = cmd_pipeline(cfg);
        const ProbList stacker_preds =
            load_predictions(tmp.file("out_w1") / "02_stacker" / "test_preds.csv");
        const LabelList transitive =
            load_labels(tmp.file("out_w1") / "08_transitive" / "predictions.csv");
        std::map<std::string, Label> overrides(transitive.begin(), transitive.end());

        const LabelList final_w1 = load_labels(degenerate.final_labels_path);
        REQUIRE(final_w1.size() == stacker_preds.size());
        for (std::size_t i = 0; i < final_w1.size(); ++i) {
            auto it = overrides.find(stacker_preds[i].first);
            const Label expected =
                it != overrides.end() ? it->second : stacker_preds[i].second.argmax();
            CHECK(final_w1[i].second == expected);
        }
    }
}

TEST_CASE("pipeline subcommand through the binary") {
    TempDir tmp;
    const PipelineFixture fx = write_pipeline_fixture(tmp.file("fixture"), 505, 3);

    std::ostringstream cmd;
    cmd << "pipeline --train " << fx.train.string() << " --test " << fx.test.string();
    for (const auto& p : fx.preds_train) cmd << " --preds " << p.string();
    for (const auto& p : fx.preds_test) cmd << " --test-preds " << p.string();
    for (const auto& p : fx.second_preds_train) cmd << " --second-preds " << p.string();
    for (const auto& p : fx.second_preds_test) cmd << " --second-test-preds " << p.string();
    cmd << " --external-train " << fx.external_train.string() << " --external-test "
        << fx.external_test.string() << " --second-external-train "
        << fx.second_external_train.string() << " --second-external-test "
        << fx.second_external_test.string() << " --val-ids " << fx.val_ids.string()
        << " --out-dir " << tmp.file("out").string() << " --seed 3";
    CHECK(run_cli(cmd.str()) == 0);
    CHECK(fs::exists(tmp.file("out") / "09_final" / "labels.csv"));
    CHECK(fs::exists(tmp.file("out") / "pipeline_report.json"));
    CHECK(fs::exists(tmp.file("out") / "05_stack2" / "manifest.json"));
    CHECK(fs::exists(tmp.file("out") / "07_blend2" / "weight.json"));

    const LabelList two_level = load_labels(tmp.file("out") / "09_final" / "labels.csv");
    const EvalReport two_level_eval = evaluate_accuracy(two_level, load_labels(fx.gold_test));
    CHECK(two_level_eval.accuracy > fx.best_single_model_test_accuracy);

    // A missing prediction file is a data error naming the path.
    std::ostringstream bad;
    bad << "pipeline --train " << fx.train.string() << " --test " << fx.test.string()
        << " --preds " << tmp.file("nope.csv").string() << " --test-preds "
        << fx.preds_test[0].string() << " --external-train " << fx.external_train.string()
        << " --external-test " << fx.external_test.string() << " --val-ids "
        << fx.val_ids.string() << " --out-dir " << tmp.file("out_bad").string();
    CHECK(run_cli(bad.str()) == 2);
}

TEST_CASE("ingest canonicalizes byte-identically on re-run") {
    TempDir tmp;
    write_file(tmp.file("in.csv"),
               "id,title1,title2,label\nr1, padded  text ,other,agreed\nr2,中文,other,unrelated\n");
    const std::string base = "ingest --input " + tmp.file("in.csv").string() + " --labeled ";
    CHECK(run_cli(base + "--output " + tmp.file("a.csv").string()) == 0);
    CHECK(run_cli(base + "--output " + tmp.file("b.csv").string()) == 0);
    CHECK(slurp(tmp.file("a.csv")) == slurp(tmp.file("b.csv")));
    CHECK(slurp(tmp.file("a.csv")).find("padded text") != std::string::npos);
}
