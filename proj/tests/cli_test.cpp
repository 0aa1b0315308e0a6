#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "wlgnn/checkpoint.hpp"
#include "wlgnn/model.hpp"

namespace {

namespace fs = std::filesystem;

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::path(testing::TempDir()) / ("wlgnn_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Run run(const std::string& args) {
  static int counter = 0;
  const auto base = fs::path(testing::TempDir()) / ("wlgnn_run_" + std::to_string(counter++));
  const auto cmd = std::string(WLGNN_CLI_PATH) + " " + args + " > " + base.string() +
                   ".out 2> " + base.string() + ".err";
  const int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(base.string() + ".out");
  r.err = slurp(base.string() + ".err");
  return r;
}

std::string data(const std::string& name) { return std::string(WLGNN_DATA_DIR) + "/" + name; }

std::size_t line_count(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

const std::string kTrainInputs = " --edges " + data("separable/edges.tsv") + " --embeddings " +
                                 data("separable/embeddings.txt") + " --config " +
                                 data("separable/train.cfg");

// --- tuples ----------------------------------------------------------------

TEST(CliTuples, SingleEdgeCounts) {
  const auto dir = scratch("tuples");
  const auto r = run("tuples --edges " + data("single_edge.tsv") + " --k 2 --out " + dir.string());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, "tuples=3\nG1 arcs=1\nG2 arcs=1\n");
  EXPECT_EQ(slurp(dir / "tuples.tsv"), "0\ta,a\n1\ta,b\n2\tb,b\n");
  EXPECT_EQ(slurp(dir / "G2.tsv"), "0\t1\n");
}

TEST(CliTuples, OrderOneListsNodes) {
  const auto r = run("tuples --edges " + data("cycle6.tsv") + " --k 1");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "tuples=6");
}

TEST(CliTuples, MissingEdgeFileNamesPath) {
  const auto r = run("tuples --edges /nonexistent/edges.tsv");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("/nonexistent/edges.tsv"), std::string::npos) << r.err;
}

TEST(CliTuples, UnsupportedOrderIsConfigError) {
  EXPECT_EQ(run("tuples --edges " + data("single_edge.tsv") + " --k 4").status, 2);
}

TEST(CliUsage, UnknownFlagIsConfigError) {
  EXPECT_EQ(run("tuples --edges " + data("single_edge.tsv") + " --bogus").status, 2);
  EXPECT_EQ(run("").status, 2);
  EXPECT_EQ(run("--help").status, 0);
}

// --- wl --------------------------------------------------------------------

TEST(CliWl, IdenticalFilesAreNotDistinguished) {
  const auto r = run("wl " + data("cycle6.tsv") + " " + data("cycle6.tsv") + " --k 2");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out.rfind("NOT-DISTINGUISHED", 0), 0u) << r.out;
}

TEST(CliWl, CycleVersusTrianglesByOrder) {
  const auto g = data("cycle6.tsv") + " " + data("two_triangles.tsv");
  const auto k1 = run("wl " + g + " --k 1");
  ASSERT_EQ(k1.status, 0) << k1.err;
  EXPECT_EQ(k1.out.rfind("NOT-DISTINGUISHED rounds=", 0), 0u) << k1.out;
  const auto k2 = run("wl " + g + " --k 2");
  ASSERT_EQ(k2.status, 0) << k2.err;
  EXPECT_EQ(k2.out.rfind("DISTINGUISHED rounds=", 0), 0u) << k2.out;
  const auto restricted = run("wl " + g + " --k 2 --mode restricted");
  EXPECT_EQ(restricted.out.rfind("NOT-DISTINGUISHED", 0), 0u) << restricted.out;
}

TEST(CliWl, ColorDump) {
  const auto dir = scratch("wl");
  const auto r = run("wl " + data("single_edge.tsv") + " " + data("single_edge.tsv") +
                     " --k 2 --mode restricted --color-dump " + (dir / "colors.tsv").string());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto dump = slurp(dir / "colors.tsv");
  EXPECT_EQ(line_count(dump), 4u);
  EXPECT_NE(dump.find("# histogram"), std::string::npos);
}

// --- train -----------------------------------------------------------------

TEST(CliTrain, SeparableFixtureFitsTrainPairs) {
  const auto dir = scratch("train");
  const auto r = run("train" + kTrainInputs + " --out " + dir.string());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto metrics = slurp(dir / "metrics.tsv");
  std::istringstream lines(metrics);
  std::string header, train_row, test_row;
  std::getline(lines, header);
  std::getline(lines, train_row);
  std::getline(lines, test_row);
  EXPECT_EQ(header, "dataset\tprecision\trecall\tf1\ttp\tfp\tfn\ttn\tthreshold");
  EXPECT_EQ(train_row.rfind("train\t1.000000\t1.000000\t1.000000\t", 0), 0u) << metrics;
  EXPECT_EQ(test_row.rfind("test\t", 0), 0u);
  EXPECT_EQ(line_count(slurp(dir / "loss.csv")), 301u);
  EXPECT_TRUE(fs::exists(dir / "model.ckpt"));
  EXPECT_EQ(line_count(slurp(dir / "split.tsv")), 50u);
}

TEST(CliTrain, RepeatedRunsAreByteIdentical) {
  const auto a = scratch("train_a");
  const auto b = scratch("train_b");
  ASSERT_EQ(run("train" + kTrainInputs + " --epochs 40 --out " + a.string()).status, 0);
  ASSERT_EQ(run("train" + kTrainInputs + " --epochs 40 --out " + b.string()).status, 0);
  for (const char* f : {"metrics.tsv", "loss.csv", "model.ckpt", "split.tsv"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST(CliTrain, ZeroEpochsWritesInitialization) {
  const auto dir = scratch("train_zero");
  const auto r = run("train" + kTrainInputs + " --epochs 0 --out " + dir.string());
  ASSERT_EQ(r.status, 0) << r.err;
  std::ifstream in(dir / "model.ckpt");
  const auto model = wlgnn::load_checkpoint(in);
  wlgnn::ModelConfig config;
  config.gnn = wlgnn::GnnConfig{2, 2, 4, 8, 8};
  EXPECT_TRUE(model == wlgnn::init_model(config, 3));
  EXPECT_EQ(slurp(dir / "loss.csv"), "epoch,mean_loss\n");
  EXPECT_EQ(line_count(slurp(dir / "metrics.tsv")), 3u);
}

TEST(CliTrain, FlagsOverrideConfigAndPresetSetsBatch) {
  const auto dir = scratch("train_flags");
  const auto r = run("train" + kTrainInputs + " --epochs 2 --dataset-preset university-courses" +
                     " --out " + dir.string());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(line_count(slurp(dir / "loss.csv")), 3u);
  // The config file pins the batch size, so the preset leaves it alone.
  EXPECT_NE(r.err.find("batch=16"), std::string::npos) << r.err;

  const auto plain = run("train --edges " + data("separable/edges.tsv") + " --embeddings " +
                         data("separable/embeddings.txt") +
                         " --epochs 1 --hidden-dim 4 --output-dim 4 "
                         "--dataset-preset university-courses --out " +
                         dir.string());
  ASSERT_EQ(plain.status, 0) << plain.err;
  EXPECT_NE(plain.err.find("batch=512"), std::string::npos) << plain.err;
}

TEST(CliTrain, BadConfigIsExitTwo) {
  const auto dir = scratch("train_badcfg");
  std::ofstream(dir / "bad.cfg") << "no-such-key = 1\n";
  EXPECT_EQ(run("train --edges " + data("separable/edges.tsv") + " --embeddings " +
                data("separable/embeddings.txt") + " --config " + (dir / "bad.cfg").string())
                .status,
            2);
  const auto missing = run("train --edges " + data("separable/edges.tsv") + " --embeddings " +
                           data("separable/embeddings.txt") + " --config /nonexistent/train.cfg");
  EXPECT_EQ(missing.status, 2);
  EXPECT_NE(missing.err.find("/nonexistent/train.cfg"), std::string::npos);
}

TEST(CliTrain, DivergenceIsExitThree) {
  const auto dir = scratch("train_diverge");
  const auto r = run("train" + kTrainInputs + " --epochs 20 --learning-rate 1e300 --out " +
                     dir.string());
  EXPECT_EQ(r.status, 3) << r.err;
  EXPECT_NE(r.err.find("diverged"), std::string::npos);
}

// --- predict / evaluate -----------------------------------------------------

class CliWithModel : public testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = scratch("model");
    const auto r = run("train" + kTrainInputs + " --epochs 60 --out " + dir_.string());
    ASSERT_EQ(r.status, 0) << r.err;
  }

  static std::string inputs(const std::string& pairs, const std::string& embeddings =
                                                          "separable/embeddings.txt") {
    return " --edges " + data("separable/edges.tsv") + " --embeddings " + data(embeddings) +
           " --checkpoint " + (dir_ / "model.ckpt").string() + " --pairs " + data(pairs);
  }

  static fs::path dir_;
};

fs::path CliWithModel::dir_;

TEST_F(CliWithModel, PredictWritesOneRowPerPair) {
  const auto r = run("predict" + inputs("separable/pairs.tsv"));
  ASSERT_EQ(r.status, 0) << r.err;
  std::istringstream rows(r.out);
  std::string src, tgt, prob;
  std::vector<std::string> probs;
  while (rows >> src >> tgt >> prob) {
    EXPECT_EQ(prob.size(), 8u) << prob;  // 0.dddddd
    probs.push_back(prob);
  }
  ASSERT_EQ(probs.size(), 3u);
  EXPECT_EQ(r.out.rfind("s0\tt0\t", 0), 0u);
  EXPECT_NE(probs[0], probs[1]);  // (p, q) vs (q, p)
}

TEST_F(CliWithModel, PredictToFileMatchesStdout) {
  const auto out = dir_ / "pred.tsv";
  const auto to_file = run("predict" + inputs("separable/pairs.tsv") + " --output " + out.string());
  ASSERT_EQ(to_file.status, 0);
  EXPECT_EQ(slurp(out), run("predict" + inputs("separable/pairs.tsv")).out);
}

TEST_F(CliWithModel, EmptyPairFileGivesEmptyOutput) {
  const auto r = run("predict" + inputs("separable/empty_pairs.tsv"));
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, "");
}

TEST_F(CliWithModel, WidthMismatchReportsDimension) {
  const auto r = run("predict" + inputs("separable/pairs.tsv", "separable/embeddings_wide.txt"));
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("dimension"), std::string::npos) << r.err;
}

TEST_F(CliWithModel, EvaluateReportsMetrics) {
  const auto r = run("evaluate" + inputs("separable/labeled_pairs.tsv") +
                     " --threshold 0.3 --threshold 0.7 --name fixture");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(line_count(r.out), 3u);
  EXPECT_NE(r.out.find("\nfixture\t"), std::string::npos);
  EXPECT_EQ(run("evaluate" + inputs("separable/pairs.tsv")).status, 2);  // no labels
}

}  // namespace
