#include "fixtures.hpp"
#include "surrogates.hpp"
#include "sparse_svm/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace sparse_svm;
using nlohmann::json;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
  json parsed() const { return json::parse(out); }
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("sparse_svm_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

std::string write_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  out.precision(17);
  for (Eigen::Index j = 0; j < d.n(); ++j) out << "f" << j << ",";
  out << "label\n";
  for (Eigen::Index i = 0; i < d.m(); ++i) {
    for (Eigen::Index j = 0; j < d.n(); ++j) out << d.X()(i, j) << ",";
    out << (d.y()[i] > 0 ? "+1" : "-1") << "\n";
  }
  return path;
}

Dataset doubled_dense_pair() {
  Eigen::MatrixXd X(4, 2);
  X << 1, 1, -1, -1, 1, 1, -1, -1;
  return {X, Eigen::Vector4d(1, -1, 1, -1)};
}

std::set<std::string> keys(const json& j) {
  std::set<std::string> k;
  for (auto it = j.begin(); it != j.end(); ++it) k.insert(it.key());
  return k;
}

}  // namespace

TEST(CliSolve, CopOnDensePair) {
  TempDir t;
  const auto path = write_csv(fixtures::dense_pair(), t.file("dense.csv"));
  const CliRun r = run({"solve", "--dataset", path, "--method", "cop", "--B", "1", "--C", "10", "--out", t.file("r.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = r.parsed();
  EXPECT_NEAR(j["obj"].get<double>(), 0.5, 1e-7);
  EXPECT_EQ(j["features"], json::array({0}));
  EXPECT_EQ(j["status"], "Optimal");
  EXPECT_EQ(j["dataset"], "dense");
  EXPECT_DOUBLE_EQ(j["acc_train"].get<double>(), 1.0);
  std::ifstream f(t.file("r.json"));
  EXPECT_EQ(json::parse(f), j);
}

TEST(CliSolve, ResultSchemaIsStable) {
  TempDir t;
  const auto path = write_csv(fixtures::sparse_pair(), t.file("sparse.csv"));
  const std::set<std::string> golden{"B",     "C",         "M",        "acc_train", "acc_val", "dataset",
                                     "features", "gap",    "lb",       "method",    "obj",     "preprocessing",
                                     "schema", "status",   "time_s",   "ub"};
  for (const std::string m : {"svm", "cop", "dscop", "local-search", "kernel-search", "heuristic", "exact"}) {
    const CliRun r = run({"solve", "--dataset", path, "--method", m, "--B", "1"});
    ASSERT_EQ(r.code, 0) << m << ": " << r.err;
    const json j = r.parsed();
    EXPECT_EQ(keys(j), golden) << m;
    EXPECT_EQ(j["schema"], 1);
    EXPECT_EQ(ResultRecord::from_json(j).to_json(), j) << m;
  }
}

TEST(CliSolve, SurrogateWholesaleCopClosesGap) {
  TempDir t;
  const Dataset d = surrogates::generate(surrogates::kWholesale);
  const auto path = write_csv(d, t.file("wholesale.csv"));
  const CliRun r = run({"solve", "--dataset", path, "--method", "cop", "--B", "3", "--C", "10"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = r.parsed();
  EXPECT_LE(j["gap"].get<double>(), 1e-6);
  const double opt = brute_force_fs(d, 10.0, 3).point.objective;
  EXPECT_NEAR(j["obj"].get<double>(), opt, 1e-5 * opt);
}

TEST(CliSolve, ExitCodes) {
  TempDir t;
  const auto path = write_csv(fixtures::dense_pair(), t.file("dense.csv"));
  EXPECT_EQ(run({"solve", "--dataset", path, "--method", "bigmp", "--B", "1"}).code, 64);
  EXPECT_EQ(run({"solve", "--dataset", path, "--method", "cop", "--B", "0"}).code, 64);
  EXPECT_EQ(run({"solve", "--dataset", path, "--method", "cop", "--B", "3"}).code, 64);
  EXPECT_EQ(run({"solve", "--dataset", path, "--method", "cop", "--C", "-1"}).code, 64);
  EXPECT_EQ(run({"solve", "--dataset", path, "--method", "simplex"}).code, 64);
  EXPECT_EQ(run({"solve", "--dataset", path, "--bogus"}).code, 64);
  EXPECT_EQ(run({"solve"}).code, 64);
  EXPECT_EQ(run({}).code, 64);
  EXPECT_EQ(run({"solve", "--dataset", t.file("missing.csv")}).code, 3);
  EXPECT_EQ(run({"solve", "--dataset", path, "--method", "bigmp", "--B", "1", "--M", "1"}).code, 0);
  EXPECT_EQ(run({"solve", "--dataset", path, "--method", "bigmp", "--B", "1", "--tighten"}).code, 0);
  EXPECT_EQ(run({"solve", "--help"}).code, 0);
}

TEST(CliSolve, TimeLimitWithIncumbentExitsTwo) {
  TempDir t;
  const auto path = write_csv(fixtures::random_instance(30, 6, 5, 3), t.file("r.csv"));
  const CliRun r = run({"solve", "--dataset", path, "--method", "exact", "--B", "2", "--time-limit", "0"});
  ASSERT_EQ(r.code, 2) << r.err;
  const json j = r.parsed();
  EXPECT_EQ(j["status"], "TimeLimit");
  EXPECT_FALSE(j["obj"].is_null());
}

TEST(CliSolve, TraceFiles) {
  TempDir t;
  const auto path = write_csv(fixtures::random_instance(30, 6, 6, 3), t.file("r.csv"));
  ASSERT_EQ(run({"solve", "--dataset", path, "--method", "exact", "--B", "2", "--trace", t.file("e.json")}).code, 0);
  std::ifstream e(t.file("e.json"));
  const json trace = json::parse(e);
  ASSERT_TRUE(trace.is_array());
  ASSERT_FALSE(trace.empty());
  double prev_ub = std::numeric_limits<double>::infinity();
  for (const auto& it : trace) {
    EXPECT_LE(it["UB"].get<double>(), prev_ub);
    prev_ub = it["UB"].get<double>();
  }
  ASSERT_EQ(run({"solve", "--dataset", path, "--method", "cop", "--B", "2", "--trace", t.file("n.log")}).code, 0);
  std::ifstream n(t.file("n.log"));
  std::string line;
  ASSERT_TRUE(std::getline(n, line));
  EXPECT_EQ(line.rfind("node id=0 parent=-1 depth=0", 0), 0u) << line;
}

TEST(CliSolve, LibsvmInput) {
  TempDir t;
  {
    std::ofstream f(t.file("dense.svm"));
    f << "+1 1:1 2:1\n-1 1:-1 2:-1\n";
  }
  const CliRun r = run({"solve", "--dataset", t.file("dense.svm"), "--method", "svm"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(r.parsed()["obj"].get<double>(), 0.25, 1e-7);
  EXPECT_EQ(run({"solve", "--dataset", t.file("dense.svm"), "--label-col", "0"}).code, 64);
}

TEST(CliRelax, DensePairTable) {
  TempDir t;
  const auto path = write_csv(fixtures::dense_pair(), t.file("dense.csv"));
  const CliRun r = run({"relax", "--dataset", path, "--B", "1", "--C", "10", "--M", "1", "--csv", t.file("b.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = r.parsed();
  EXPECT_NEAR(j["svm"].get<double>(), 0.25, 1e-7);
  EXPECT_NEAR(j["boxmp"].get<double>(), 0.25, 1e-7);
  EXPECT_NEAR(j["dscop"].get<double>(), 0.5, 1e-7);
  EXPECT_FALSE(j["dscomp"].is_null());
  EXPECT_EQ(keys(j), (std::set<std::string>{"B", "C", "M", "box_collapse_threshold", "boxmp", "boxmp_M", "dataset",
                                            "dscomp", "dscop", "preprocessing", "svm"}));
  std::ifstream f(t.file("b.csv"));
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "method,bound");

  const json no_m = run({"relax", "--dataset", path, "--B", "1", "--C", "10"}).parsed();
  EXPECT_TRUE(no_m["dscomp"].is_null());
  EXPECT_TRUE(no_m["M"].is_null());
  const json tightened = run({"relax", "--dataset", path, "--B", "1", "--C", "10", "--tighten"}).parsed();
  EXPECT_FALSE(tightened["dscomp"].is_null());
}

TEST(CliRelax, OrderingOnRandomInstances) {
  TempDir t;
  for (unsigned seed = 0; seed < 4; ++seed) {
    const auto path = write_csv(fixtures::random_instance(40, 6, 300 + seed, 3), t.file("r.csv"));
    const json j = run({"relax", "--dataset", path, "--B", "2", "--tighten"}).parsed();
    const double svm = j["svm"].get<double>();
    EXPECT_GE(j["dscop"].get<double>(), svm - 1e-7);
    EXPECT_GE(j["dscomp"].get<double>(), j["dscop"].get<double>() - 1e-6 * (1 + svm));
    EXPECT_GE(j["boxmp"].get<double>(), svm - 1e-7);
  }
}

TEST(CliCv, DoubledDensePairIsSeparable) {
  TempDir t;
  const auto path = write_csv(doubled_dense_pair(), t.file("d4.csv"));
  const CliRun r = run({"cv", "--dataset", path, "--folds", "2", "--B-grid", "1", "--C-grid", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = r.parsed();
  ASSERT_EQ(j["summary"].size(), 1u);
  EXPECT_DOUBLE_EQ(j["summary"][0]["best_mean_acc"].get<double>(), 1.0);
}

TEST(CliCv, GridShapeSummaryAndSeed) {
  TempDir t;
  const auto path = write_csv(fixtures::random_instance(36, 5, 42, 2), t.file("r.csv"));
  const std::vector<std::string> args{"cv",       "--dataset", path,       "--folds", "3",      "--C-grid",
                                      "0.1,1,10", "--B-grid",  "1,3",      "--seed",  "7",      "--method",
                                      "cop",      "--standardize", "--csv", t.file("s.csv")};
  const CliRun r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = r.parsed();
  ASSERT_EQ(j["grid"].size(), 3u * 3u * 2u);
  for (const auto& s : j["summary"]) {
    double best = -1.0;
    for (double C : {0.1, 1.0, 10.0}) {
      double sum = 0.0;
      for (const auto& row : j["grid"])
        if (row["B"] == s["B"] && row["C"] == C) sum += row["acc_val"].get<double>();
      best = std::max(best, sum / 3.0);
    }
    EXPECT_DOUBLE_EQ(s["best_mean_acc"].get<double>(), best);
  }
  for (const auto& row : j["grid"]) EXPECT_LE(row["features"].size(), row["B"].get<std::size_t>());

  auto strip = [](json g) {
    for (auto& row : g) row.erase("time_s");
    return g;
  };
  EXPECT_EQ(strip(run(args).parsed()["grid"]), strip(j["grid"]));
  std::vector<std::string> other = args;
  other[10] = "8";
  EXPECT_NE(strip(run(other).parsed()["grid"]), strip(j["grid"]));
}

TEST(CliCv, DefaultCGrid) {
  TempDir t;
  const auto path = write_csv(doubled_dense_pair(), t.file("d4.csv"));
  const json j = run({"cv", "--dataset", path, "--folds", "2", "--method", "svm"}).parsed();
  EXPECT_EQ(j["grid"].size(), 2u * 7u);
}

TEST(CliOracle, DensePairPasses) {
  TempDir t;
  const auto path = write_csv(fixtures::dense_pair(), t.file("dense.csv"));
  const CliRun r = run({"oracle", "--dataset", path});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = r.parsed();
  EXPECT_TRUE(j["all_exact_pass"].get<bool>());
  EXPECT_EQ(j["rows"].size(), 3u * 2u);
  for (const auto& row : j["rows"]) {
    for (const std::string m : {"local-search", "kernel-search"})
      EXPECT_GE(row["methods"][m]["rel_error"].get<double>(), -1e-9);
    if (row["B"] == 2) {
      const double svm = solve_svm(fixtures::dense_pair(), row["C"].get<double>()).objective;
      for (const auto& [name, m] : row["methods"].items()) EXPECT_NEAR(m["value"].get<double>(), svm, 1e-6) << name;
    }
  }
}

TEST(CliOracle, GuardExitsSixtyFive) {
  TempDir t;
  const auto path = write_csv(fixtures::random_instance(30, 21, 1, 2), t.file("wide.csv"));
  EXPECT_EQ(run({"oracle", "--dataset", path, "--B-grid", "1"}).code, 65);
}
