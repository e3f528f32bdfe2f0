#include <cstdlib>
#include <fstream>

#include "doctest.h"
#include "fusekit/csv.hpp"
#include "fusekit/dataset.hpp"
#include "test_util.hpp"

using namespace fusekit;
using testutil::TempDir;

namespace {

const char* cli() { return FUSEKIT_CLI_PATH; }

int run_cli(const std::string& args) {
    const std::string cmd = std::string(cli()) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

void write_synth_spec(const std::string& path, int classes = 3, int tags = 5, int dim = 3,
                      int per_class = 20) {
    std::ofstream out(path);
    out << R"({"name": "clitest", "n_classes": )" << classes << R"(, "n_tags": )" << tags
        << R"(, "feature_dim": )" << dim << R"(, "samples_per_class": )" << per_class
        << R"(, "answers": {"informative": true, "noise_rate": 0.2}})";
}

}  // namespace

TEST_CASE("synth writes a loadable manifest") {
    TempDir dir("cli_synth");
    write_synth_spec(dir.file("spec.json"));
    REQUIRE(run_cli("synth --spec " + dir.file("spec.json") + " --seed 1 --out " +
                    dir.file("data")) == 0);
    const Dataset ds = load_dataset(dir.file("data/manifest.json"));
    CHECK(ds.size() == 60);
    CHECK(ds.n_classes == 3);
}

TEST_CASE("stochastic subcommands refuse to run without --seed") {
    TempDir dir("cli_seed");
    write_synth_spec(dir.file("spec.json"));
    CHECK(run_cli("synth --spec " + dir.file("spec.json") + " --out " + dir.file("d")) == 2);
}

TEST_CASE("fuse without thresholds is a usage error") {
    TempDir dir("cli_fuse");
    write_text_file(dir.file("p.csv"), "a,b\n0.5,0.5\n");
    const int code = run_cli("fuse --posteriors-x " + dir.file("p.csv") + " --posteriors-s " +
                             dir.file("p.csv") + " --method modified-nb --out " +
                             dir.file("f.csv"));
    CHECK(code == 2);
}

TEST_CASE("unknown subcommand and missing file exit codes") {
    TempDir dir("cli_err");
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("predict --manifest " + dir.file("absent.json") + " --model " +
                  dir.file("absent.txt") + " --out " + dir.file("o.csv")) == 3);
}

TEST_CASE("stage-wise pipeline round trip") {
    TempDir dir("cli_pipe");
    write_synth_spec(dir.file("spec.json"));
    REQUIRE(run_cli("synth --spec " + dir.file("spec.json") + " --seed 3 --out " +
                    dir.file("train")) == 0);
    REQUIRE(run_cli("synth --spec " + dir.file("spec.json") + " --seed 4 --out " +
                    dir.file("test")) == 0);

    REQUIRE(run_cli("fit --manifest " + dir.file("train/manifest.json") +
                    " --model-type forest --source features --trees 20 --out " +
                    dir.file("visual.model") + " --seed 5") == 0);
    REQUIRE(run_cli("fit --manifest " + dir.file("train/manifest.json") +
                    " --model-type rnb --bags 20 --out " + dir.file("textual.model") +
                    " --seed 6") == 0);

    REQUIRE(run_cli("predict --manifest " + dir.file("test/manifest.json") + " --model " +
                    dir.file("visual.model") + " --out " + dir.file("px.csv")) == 0);
    REQUIRE(run_cli("predict --manifest " + dir.file("test/manifest.json") + " --model " +
                    dir.file("textual.model") + " --out " + dir.file("ps.csv")) == 0);

    const PosteriorFile px = read_posterior_csv(dir.file("px.csv"));
    const PosteriorFile ps = read_posterior_csv(dir.file("ps.csv"));
    CHECK(px.values.rows() == 60);
    CHECK(px.class_names == std::vector<std::string>{"class_0", "class_1", "class_2"});

    REQUIRE(run_cli("grid-thresholds --posteriors-x " + dir.file("px.csv") + " --posteriors-s " +
                    dir.file("ps.csv") + " --manifest " + dir.file("test/manifest.json") +
                    " --out " + dir.file("thresholds.txt")) == 0);

    REQUIRE(run_cli("fuse --posteriors-x " + dir.file("px.csv") + " --posteriors-s " +
                    dir.file("ps.csv") + " --method modified-nb --thresholds " +
                    dir.file("thresholds.txt") + " --out " + dir.file("fused.csv") +
                    " --predictions " + dir.file("preds.csv")) == 0);
    const PosteriorFile fused = read_posterior_csv(dir.file("fused.csv"));
    CHECK(fused.values.rows() == 60);

    REQUIRE(run_cli("train-net --posteriors-x " + dir.file("px.csv") + " --posteriors-s " +
                    dir.file("ps.csv") + " --manifest " + dir.file("test/manifest.json") +
                    " --out " + dir.file("net.model") + " --seed 7 --max-epochs 50 --trace " +
                    dir.file("trace.csv")) == 0);
    CHECK(testutil::slurp(dir.file("trace.csv")).rfind("iteration,train_loss,val_loss,accepted", 0) ==
          0);
    REQUIRE(run_cli("fuse --posteriors-x " + dir.file("px.csv") + " --posteriors-s " +
                    dir.file("ps.csv") + " --method neural-net --model " + dir.file("net.model") +
                    " --out " + dir.file("nn.csv")) == 0);
}

TEST_CASE("predict requires --source when dimensions are ambiguous") {
    TempDir dir("cli_amb");
    write_synth_spec(dir.file("spec.json"), 3, 4, 4, 12);  // n_tags == feature_dim
    REQUIRE(run_cli("synth --spec " + dir.file("spec.json") + " --seed 2 --out " +
                    dir.file("data")) == 0);
    REQUIRE(run_cli("fit --manifest " + dir.file("data/manifest.json") +
                    " --model-type forest --source features --trees 5 --out " +
                    dir.file("m.model") + " --seed 3") == 0);
    CHECK(run_cli("predict --manifest " + dir.file("data/manifest.json") + " --model " +
                  dir.file("m.model") + " --out " + dir.file("p.csv")) == 4);
    CHECK(run_cli("predict --manifest " + dir.file("data/manifest.json") + " --model " +
                  dir.file("m.model") + " --source features --out " + dir.file("p.csv")) == 0);
}

TEST_CASE("rnb fit rejects a non-answer source") {
    TempDir dir("cli_rnbsrc");
    write_synth_spec(dir.file("spec.json"));
    REQUIRE(run_cli("synth --spec " + dir.file("spec.json") + " --seed 2 --out " +
                    dir.file("data")) == 0);
    CHECK(run_cli("fit --manifest " + dir.file("data/manifest.json") +
                  " --model-type rnb --source features --bags 5 --out " + dir.file("m.model") +
                  " --seed 3") == 4);
}

TEST_CASE("fuse accepts an explicit prior file") {
    TempDir dir("cli_prior");
    write_text_file(dir.file("px.csv"), "a,b\n0.7,0.3\n");
    write_text_file(dir.file("ps.csv"), "a,b\n0.6,0.4\n");
    write_text_file(dir.file("prior.csv"), "0.5,0.5\n");
    CHECK(run_cli("fuse --posteriors-x " + dir.file("px.csv") + " --posteriors-s " +
                  dir.file("ps.csv") + " --method equal-weight --prior-file " +
                  dir.file("prior.csv") + " --out " + dir.file("f.csv")) == 0);
    const PosteriorFile fused = read_posterior_csv(dir.file("f.csv"));
    CHECK(fused.values.at(0, 0) == doctest::Approx(0.42 / 0.54).epsilon(1e-12));
    // Wrong width prior is a validation error.
    write_text_file(dir.file("bad.csv"), "0.3,0.3,0.4\n");
    CHECK(run_cli("fuse --posteriors-x " + dir.file("px.csv") + " --posteriors-s " +
                  dir.file("ps.csv") + " --method equal-weight --prior-file " +
                  dir.file("bad.csv") + " --out " + dir.file("f.csv")) == 4);
}

TEST_CASE("eval runs twice to identical outputs") {
    TempDir dir("cli_eval");
    write_synth_spec(dir.file("spec.json"), 3, 5, 3, 24);
    REQUIRE(run_cli("synth --spec " + dir.file("spec.json") + " --seed 11 --out " +
                    dir.file("data")) == 0);
    write_text_file(dir.file("config.json"), R"({
  "schema_version": 1,
  "dataset": "data/manifest.json",
  "split": {"type": "repeated", "repeats": 2, "train_per_class": 12},
  "visual": {"type": "forest", "n_trees": 10},
  "textual": {"type": "rnb", "bags": 10},
  "methods": ["equal-weight", "modified-nb"],
  "net": {"max_epochs": 40, "patience": 40}
})");
    REQUIRE(run_cli("eval --config " + dir.file("config.json") + " --seed 9 --out " +
                    dir.file("out1")) == 0);
    REQUIRE(run_cli("eval --config " + dir.file("config.json") + " --seed 9 --out " +
                    dir.file("out2")) == 0);
    for (const char* name : {"report.csv", "report.txt", "runs.csv", "per_class_f1.csv"})
        CHECK(testutil::slurp(dir.file(std::string("out1/") + name)) ==
              testutil::slurp(dir.file(std::string("out2/") + name)));

    // report re-renders the table from runs.csv.
    REQUIRE(run_cli("report --runs " + dir.file("out1/runs.csv") + " --out " +
                    dir.file("table.txt")) == 0);
    CHECK(testutil::slurp(dir.file("table.txt")).find("equal-weight") != std::string::npos);
}
