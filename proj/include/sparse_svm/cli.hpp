#pragma once

#include "sparse_svm/dataio.hpp"
#include "sparse_svm/exact.hpp"
#include "sparse_svm/heuristics.hpp"
#include "sparse_svm/mip.hpp"
#include "sparse_svm/relaxations.hpp"
#include "sparse_svm/svm.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace sparse_svm::cli {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,  // oracle found a mismatch
  kExitTimeLimit = 2,     // time limit hit, incumbent available
  kExitError = 3,
  kExitUsage = 64,
  kExitGuard = 65,
};

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Options {
  std::string dataset;
  std::string format;  // empty: from the file extension
  std::string label_col;
  std::optional<std::string> positive_label;
  bool standardize = false;

  std::string method = "cop";
  std::string strategy = "KS";
  int B = 1;
  double C = 1.0;
  std::optional<double> M;
  bool tighten = false;
  int k = 10;
  int rho = 10;
  int s = 10;
  double time_limit = 3600.0;
  double sub_time_limit = 60.0;
  double gap_stop = 0.01;

  int folds = 10;
  std::vector<double> C_grid;
  std::vector<int> B_grid;
  unsigned seed = 0;

  std::string out;
  std::string trace;
  std::string csv;
};

namespace cli_detail {

inline const std::vector<std::string> kSolveMethods{"svm",           "bigmp",     "cop",       "boxmp",
                                                    "dscop",         "dscomp",    "local-search",
                                                    "kernel-search", "heuristic", "exact"};

inline std::vector<double> default_c_grid() {
  std::vector<double> g;
  for (int r = -3; r <= 3; ++r) g.push_back(std::pow(10.0, r));
  return g;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::string stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

inline Dataset load(const Options& o) {
  if (o.dataset.empty()) throw UsageError("--dataset is required");
  std::string fmt = o.format;
  if (fmt.empty()) fmt = std::filesystem::path(o.dataset).extension() == ".csv" ? "csv" : "libsvm";
  if (fmt == "csv") {
    LabelColumn lc;
    if (!o.label_col.empty()) lc.name = o.label_col;
    return load_csv(o.dataset, lc, o.positive_label);
  }
  if (!o.label_col.empty() || o.positive_label) throw UsageError("--label-col and --positive-label apply to csv only");
  return load_libsvm(o.dataset);
}

inline Dataset prepare(const Options& o) {
  Dataset d = load(o);
  return o.standardize ? standardize(d).first : d;
}

inline void check_instance(const Dataset& d, double C, int B) {
  if (!(C > 0.0) || !std::isfinite(C)) throw UsageError("C must be positive");
  if (B < 1 || B > d.n())
    throw UsageError("B must satisfy 1 <= B <= n (n = " + std::to_string(d.n()) + "), got " + std::to_string(B));
}

inline Strategy parse_strategy(const std::string& s) {
  if (s == "LS" || s == "local-search") return Strategy::kLocalSearch;
  if (s == "KS" || s == "kernel-search") return Strategy::kKernelSearch;
  throw UsageError("unknown strategy '" + s + "'");
}

inline HeuristicParams heuristic_params(const Options& o, Strategy st) {
  if (o.k < 0) throw UsageError("--k must be nonnegative");
  if (o.rho < 1) throw UsageError("--rho must be at least 1");
  HeuristicParams p;
  p.strategy = st;
  p.k = o.k;
  p.rho = o.rho;
  p.sub_time_limit_s = o.sub_time_limit;
  p.mip.time_limit_s = o.time_limit;
  return p;
}

/// M from --M, or from tightening around a kernel-search upper bound.
inline std::optional<double> resolve_m(const Dataset& d, double C, int B, const Options& o) {
  if (o.M) {
    if (!(*o.M > 0.0)) throw UsageError("--M must be positive");
    return o.M;
  }
  if (!o.tighten) return std::nullopt;
  const HeuristicParams hp = heuristic_params(o, parse_strategy(o.strategy));
  const HeuristicResult h = run_strategy(d, C, B, hp, std::nullopt);
  return tighten_big_m(d, C, B, h.UB, hp.mip.ipm).M;
}

/// Outcome of one solve by name, independent of output formatting.
struct Fit {
  std::optional<PrimalPoint> point;
  std::optional<double> obj, lb, ub, M;
  std::string status;
  nlohmann::json trace = nlohmann::json::array();
  bool time_limit = false;
};

inline void from_mip(Fit& f, const MipResult& r) {
  f.status = to_string(r.status);
  f.time_limit = r.status == MipStatus::kTimeLimit;
  if (r.incumbent) {
    f.point = *r.incumbent;
    f.obj = r.UB;
  }
  if (std::isfinite(r.LB)) f.lb = r.LB;
  if (std::isfinite(r.UB)) f.ub = r.UB;
}

inline nlohmann::json stage_json(const HeuristicStage& s) {
  nlohmann::json j{{"stage", s.name}, {"K", s.K}, {"status", to_string(s.status)}, {"time_s", s.time_s}};
  j["objective"] = s.objective ? nlohmann::json(*s.objective) : nlohmann::json(nullptr);
  j["ub"] = std::isfinite(s.ub) ? nlohmann::json(s.ub) : nlohmann::json(nullptr);
  return j;
}

inline void from_heuristic(Fit& f, const HeuristicResult& h) {
  f.point = h.point;
  f.obj = f.ub = h.UB;
  f.status = "Feasible";
  for (const auto& s : h.stages) f.trace.push_back(stage_json(s));
}

inline Fit fit(const Dataset& d, double C, int B, const std::string& method, const Options& o,
               std::ostream* node_log = nullptr) {
  const Strategy st = parse_strategy(o.strategy);
  HeuristicParams hp = heuristic_params(o, st);
  MipOptions mo;
  mo.time_limit_s = o.time_limit;
  mo.node_log = node_log;
  Fit f;
  if (method == "svm") {
    f.point = solve_svm(d, C);
    f.obj = f.lb = f.ub = f.point->objective;
    f.status = "Optimal";
  } else if (method == "cop") {
    from_mip(f, solve_cop_full(d, C, B, mo));
  } else if (method == "bigmp") {
    f.M = resolve_m(d, C, B, o);
    if (!f.M) throw UsageError("--method bigmp needs --M or --tighten");
    from_mip(f, solve_bigmp_full(d, C, B, *f.M, mo));
  } else if (method == "boxmp" || method == "dscop" || method == "dscomp") {
    RelaxationSolution r;
    if (method == "dscop") {
      r = solve_dscop(d, C, B);
    } else {
      f.M = resolve_m(d, C, B, o);
      if (!f.M) throw UsageError("--method " + method + " needs --M or --tighten");
      r = method == "boxmp" ? solve_boxmp(d, C, B, *f.M) : solve_dscomp(d, C, B, *f.M);
    }
    f.point = r.point;
    f.obj = f.lb = r.lower_bound;
    f.status = "Optimal";
  } else if (method == "local-search" || method == "kernel-search") {
    hp.strategy = method == "local-search" ? Strategy::kLocalSearch : Strategy::kKernelSearch;
    from_heuristic(f, run_strategy(d, C, B, hp, std::nullopt));
  } else if (method == "heuristic") {
    const HeuristicOutcome h = heuristic_procedure(d, C, B, hp);
    from_heuristic(f, h.result);
    f.M = h.bounds.M;
    f.trace = nlohmann::json::object();
    f.trace["first_stage"] = nlohmann::json::array();
    for (const auto& s : h.first_stage.stages) f.trace["first_stage"].push_back(stage_json(s));
    f.trace["second_stage_run"] = h.second_stage_run;
    f.trace["second_stage_ub"] = h.second_stage_ub ? nlohmann::json(*h.second_stage_ub) : nlohmann::json(nullptr);
    f.trace["M"] = h.bounds.M;
  } else if (method == "exact") {
    if (o.s < 1) throw UsageError("--s must be at least 1");
    ExactParams p;
    p.s = o.s;
    p.heur = hp;
    p.heur.mip.node_log = nullptr;
    if (o.M) {
      if (!(*o.M > 0.0)) throw UsageError("--M must be positive");
      p.m_source = MSource::kUser;
      p.M = o.M;
    }
    p.gap_stop_percent = o.gap_stop;
    p.time_limit_s = o.time_limit;
    p.sub_time_limit_s = o.sub_time_limit;
    const ExactResult r = exact_procedure(d, C, B, p);
    from_mip(f, r.mip);
    f.M = r.M;
    for (const auto& it : r.trace) {
      f.trace.push_back({{"iter", it.iter},
                         {"K", it.K},
                         {"sub_lb", std::isfinite(it.sub_lb) ? nlohmann::json(it.sub_lb) : nlohmann::json(nullptr)},
                         {"LB", std::isfinite(it.LB) ? nlohmann::json(it.LB) : nlohmann::json(nullptr)},
                         {"UB", it.UB},
                         {"gap_percent", std::isfinite(it.gap_percent) ? nlohmann::json(it.gap_percent)
                                                                        : nlohmann::json(nullptr)},
                         {"time_s", it.time_s},
                         {"revisit_nudge", it.revisit_nudge},
                         {"note", it.note}});
    }
  } else {
    throw UsageError("unknown method '" + method + "'");
  }
  return f;
}

inline int exit_for(const Fit& f) {
  if (f.status == "Infeasible") return kExitError;
  if (f.time_limit) return f.point ? kExitTimeLimit : kExitError;
  return kExitOk;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

inline nlohmann::json opt_json(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

/// Runs fn(i) for i in [0, count) on the worker pool; the first exception (by
/// index) is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t count, Fn fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next++) < count;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned t = std::min<std::size_t>(worker_threads(), std::max<std::size_t>(count, 1));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < t; ++i) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace cli_detail

inline int cmd_solve(const Options& o, std::ostream& out) {
  using namespace cli_detail;
  const auto t0 = std::chrono::steady_clock::now();
  if (std::find(kSolveMethods.begin(), kSolveMethods.end(), o.method) == kSolveMethods.end())
    throw UsageError("unknown method '" + o.method + "'");
  if (o.method == "bigmp" && !o.M && !o.tighten) throw UsageError("--method bigmp needs --M or --tighten");
  const Dataset d = prepare(o);
  check_instance(d, o.C, o.B);

  std::optional<std::ofstream> node_log;
  const bool mip = o.method == "cop" || o.method == "bigmp";
  if (mip && !o.trace.empty()) {
    node_log.emplace(o.trace);
    if (!*node_log) throw Error("cannot write " + o.trace);
  }
  const Fit f = fit(d, o.C, o.B, o.method, o, node_log ? &*node_log : nullptr);

  ResultRecord r;
  r.dataset = stem(o.dataset);
  r.method = o.method;
  r.C = o.C;
  r.B = o.B;
  r.M = f.M;
  r.obj = f.obj;
  r.lb = f.lb;
  r.ub = f.ub;
  r.sync_gap();
  r.time_s = seconds_since(t0);
  if (f.point) {
    r.features = support_of(f.point->w);
    r.acc_train = accuracy(*f.point, d);
  }
  r.status = f.status;
  r.preprocessing = d.provenance().preprocessing;
  if (!o.out.empty()) write_result_json(r, o.out);
  if (!o.csv.empty()) append_result_csv(r, o.csv);
  if (!mip && !o.trace.empty()) write_text(o.trace, f.trace.dump(2) + "\n");
  out << r.to_json().dump(2) << "\n";
  return exit_for(f);
}

inline int cmd_relax(const Options& o, std::ostream& out) {
  using namespace cli_detail;
  const Dataset d = prepare(o);
  check_instance(d, o.C, o.B);
  const double svm = solve_svm(d, o.C).objective;
  const double dscop = solve_dscop(d, o.C, o.B).lower_bound;
  const double threshold = box_collapse_threshold(d, o.C, o.B);
  const std::optional<double> M = resolve_m(d, o.C, o.B, o);
  // Without a valid M the box relaxation is evaluated at the collapse threshold.
  const double box_m = M.value_or(threshold);
  const double boxmp = solve_boxmp(d, o.C, o.B, box_m).lower_bound;

  nlohmann::json j;
  j["dataset"] = stem(o.dataset);
  j["C"] = o.C;
  j["B"] = o.B;
  j["svm"] = svm;
  j["boxmp"] = boxmp;
  j["boxmp_M"] = box_m;
  j["dscop"] = dscop;
  j["M"] = opt_json(M);
  j["dscomp"] = M ? nlohmann::json(solve_dscomp(d, o.C, o.B, *M).lower_bound) : nlohmann::json(nullptr);
  j["box_collapse_threshold"] = threshold;
  j["preprocessing"] = d.provenance().preprocessing;
  if (!o.out.empty()) write_text(o.out, j.dump(2) + "\n");
  if (!o.csv.empty()) {
    std::ostringstream csv;
    csv.precision(12);
    csv << "method,bound\nsvm," << svm << "\nboxmp," << boxmp << "\ndscop," << dscop << "\n";
    if (M) csv << "dscomp," << j["dscomp"].get<double>() << "\n";
    write_text(o.csv, csv.str());
  }
  out << j.dump(2) << "\n";
  return kExitOk;
}

inline int cmd_cv(const Options& o, std::ostream& out) {
  using namespace cli_detail;
  const Dataset d = prepare(o);
  const std::vector<double> Cs = o.C_grid.empty() ? default_c_grid() : o.C_grid;
  std::vector<int> Bs = o.B_grid;
  if (Bs.empty()) Bs.push_back(o.B);
  for (double C : Cs)
    for (int B : Bs) check_instance(d, C, B);
  if (o.method == "exact" && o.tighten) throw UsageError("--tighten does not apply to exact");
  const FoldPlan plan = stratified_folds(d, o.folds, o.seed);

  struct Task {
    int fold;
    double C;
    int B;
  };
  std::vector<Task> tasks;
  for (int f = 0; f < o.folds; ++f)
    for (double C : Cs)
      for (int B : Bs) tasks.push_back({f, C, B});

  std::vector<nlohmann::json> rows(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    const Task& t = tasks[i];
    const auto t0 = std::chrono::steady_clock::now();
    Dataset train = d.subset(plan.train_indices(t.fold));
    const std::vector<int> test = plan.test_indices(t.fold);
    // Validation rows keep the full matrix; scale with the training statistics.
    Eigen::MatrixXd Xv(static_cast<Eigen::Index>(test.size()), d.n());
    Eigen::VectorXd yv(static_cast<Eigen::Index>(test.size()));
    for (std::size_t r = 0; r < test.size(); ++r) {
      Xv.row(static_cast<Eigen::Index>(r)) = d.X().row(test[r]);
      yv[static_cast<Eigen::Index>(r)] = d.y()[test[r]];
    }
    if (o.standardize) {
      const auto [scaled, rec] = standardize(train);
      train = scaled;
      for (Eigen::Index j = 0; j < Xv.cols(); ++j)
        Xv.col(j) = rec.constant[static_cast<std::size_t>(j)] ? Eigen::VectorXd::Zero(Xv.rows())
                                                                : Eigen::VectorXd((Xv.col(j).array() - rec.mean[j]) / rec.scale[j]);
    }
    const Fit f = fit(train, t.C, t.B, o.method, o);
    nlohmann::json row{{"fold", t.fold}, {"C", t.C}, {"B", t.B}, {"method", o.method}, {"status", f.status}};
    row["obj"] = opt_json(f.obj);
    if (f.point) {
      std::size_t hit = 0;
      for (Eigen::Index r = 0; r < Xv.rows(); ++r)
        hit += ((Xv.row(r).dot(f.point->w) + f.point->b) >= 0.0 ? 1.0 : -1.0) == yv[r];
      row["features"] = support_of(f.point->w);
      row["acc_train"] = accuracy(*f.point, train);
      row["acc_val"] = Xv.rows() ? nlohmann::json(static_cast<double>(hit) / static_cast<double>(Xv.rows()))
                                 : nlohmann::json(nullptr);
    } else {
      row["features"] = std::vector<int>{};
      row["acc_train"] = nullptr;
      row["acc_val"] = nullptr;
    }
    row["time_s"] = seconds_since(t0);
    rows[i] = std::move(row);
  });

  // Per B: the best over C of the fold-mean validation accuracy.
  nlohmann::json summary = nlohmann::json::array();
  for (int B : Bs) {
    double best = -1.0, best_C = Cs.front();
    for (double C : Cs) {
      double sum = 0.0;
      int count = 0;
      for (const auto& r : rows)
        if (r["B"] == B && r["C"] == C && !r["acc_val"].is_null()) {
          sum += r["acc_val"].get<double>();
          ++count;
        }
      if (count && sum / count > best) {
        best = sum / count;
        best_C = C;
      }
    }
    summary.push_back({{"B", B}, {"best_mean_acc", best >= 0.0 ? nlohmann::json(best) : nlohmann::json(nullptr)},
                       {"best_C", best_C}});
  }

  nlohmann::json j{{"dataset", stem(o.dataset)}, {"method", o.method}, {"folds", o.folds}, {"seed", o.seed},
                   {"preprocessing", o.standardize ? "standardized per training split" : "none"}};
  j["grid"] = rows;
  j["summary"] = summary;
  if (!o.out.empty()) write_text(o.out, j.dump(2) + "\n");
  if (!o.csv.empty()) {
    std::ostringstream csv;
    csv.precision(12);
    csv << "B,best_mean_acc,best_C\n";
    for (const auto& s : summary) {
      csv << s["B"].get<int>() << ',';
      if (!s["best_mean_acc"].is_null()) csv << s["best_mean_acc"].get<double>();
      csv << ',' << s["best_C"].get<double>() << "\n";
    }
    write_text(o.csv, csv.str());
  }
  out << j.dump(2) << "\n";
  return kExitOk;
}

inline int cmd_oracle(const Options& o, std::ostream& out) {
  using namespace cli_detail;
  constexpr double kTol = 1e-5;
  constexpr double kSoundTol = 1e-9;
  const Dataset d = prepare(o);
  if (d.n() > 20) throw GuardExceeded("oracle needs n <= 20, got n = " + std::to_string(d.n()));
  const std::vector<double> Cs = o.C_grid.empty() ? std::vector<double>{0.1, 1.0, 10.0} : o.C_grid;
  std::vector<int> Bs = o.B_grid;
  if (Bs.empty())
    for (int B = 1; B <= d.n(); ++B) Bs.push_back(B);
  for (double C : Cs)
    for (int B : Bs) check_instance(d, C, B);

  Options eo = o;
  eo.M.reset();
  eo.tighten = true;
  bool exact_ok = true, sound = true;
  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream csv;
  csv.precision(12);
  csv << "C,B,method,value,oracle,rel_error,pass\n";
  for (double C : Cs) {
    for (int B : Bs) {
      const double opt = brute_force_fs(d, C, B).point.objective;
      nlohmann::json row{{"C", C}, {"B", B}, {"oracle", opt}};
      const auto record = [&](const std::string& name, const Fit& f, bool heuristic) {
        const double v = f.ub.value_or(std::numeric_limits<double>::infinity());
        const double err = (v - opt) / std::max(std::abs(opt), 1e-8);
        const bool pass = heuristic ? err >= -kSoundTol : std::abs(err) <= kTol;
        (heuristic ? sound : exact_ok) &= pass;
        row["methods"][name] = {{"value", opt_json(v)}, {"rel_error", opt_json(err)}, {"pass", pass}};
        if (f.M) row["methods"][name]["M"] = *f.M;
        csv << C << ',' << B << ',' << name << ',' << v << ',' << opt << ',' << err << ',' << (pass ? 1 : 0) << "\n";
      };
      record("cop", fit(d, C, B, "cop", eo), false);
      record("bigmp", fit(d, C, B, "bigmp", eo), false);
      record("exact", fit(d, C, B, "exact", o), false);
      record("local-search", fit(d, C, B, "local-search", eo), true);
      record("kernel-search", fit(d, C, B, "kernel-search", eo), true);
      rows.push_back(row);
    }
  }
  nlohmann::json j{{"dataset", stem(o.dataset)}, {"tolerance", kTol}, {"rows", rows},
                   {"all_exact_pass", exact_ok}, {"heuristics_sound", sound}};
  if (!o.out.empty()) write_text(o.out, j.dump(2) + "\n");
  if (!o.csv.empty()) write_text(o.csv, csv.str());
  out << j.dump(2) << "\n";
  return exact_ok && sound ? kExitOk : kExitVerifyFailed;
}

/// Parses argv and dispatches to a subcommand. Diagnostics go to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cardinality-constrained SVM feature selection"};
  app.require_subcommand(1, 1);
  Options o;

  const auto common = [&o](CLI::App* sc) {
    sc->add_option("--dataset", o.dataset, "Input file (csv or libsvm)")->required();
    sc->add_option("--format", o.format, "Input format; default from the extension")
        ->check(CLI::IsMember({"csv", "libsvm"}));
    sc->add_option("--label-col", o.label_col, "csv label column, by name or 0-based index (default: last)");
    sc->add_option("--positive-label", o.positive_label, "csv label value mapped to +1");
    sc->add_flag("--standardize", o.standardize, "Standardize features (per training split in cv)");
    sc->add_option("--C", o.C, "Misclassification penalty");
    sc->add_option("--B", o.B, "Feature budget");
    sc->add_option("--M", o.M, "Big-M bound on |w_j|");
    sc->add_flag("--tighten", o.tighten, "Derive M from a heuristic upper bound");
    sc->add_option("--k", o.k, "Local search: extra features beyond B");
    sc->add_option("--rho", o.rho, "Kernel search: bucket size");
    sc->add_option("--s", o.s, "Exact procedure: features added per iteration");
    sc->add_option("--strategy", o.strategy, "Heuristic strategy for heuristic/exact")
        ->check(CLI::IsMember({"LS", "KS"}));
    sc->add_option("--time-limit", o.time_limit, "Wall-clock limit in seconds");
    sc->add_option("--sub-time-limit", o.sub_time_limit, "Per-subproblem limit in seconds");
    sc->add_option("--gap-stop", o.gap_stop, "Exact procedure: stop below this percent gap");
    sc->add_option("--out", o.out, "Write the JSON result here");
    sc->add_option("--csv", o.csv, "Write CSV output here");
  };

  CLI::App* solve = app.add_subcommand("solve", "Solve one instance");
  common(solve);
  solve->add_option("--method", o.method, "Solution method")->check(CLI::IsMember(cli_detail::kSolveMethods));
  solve->add_option("--trace", o.trace, "Write node log (cop, bigmp) or stage trace (others)");

  CLI::App* relax = app.add_subcommand("relax", "Compare relaxation bounds");
  common(relax);

  CLI::App* cv = app.add_subcommand("cv", "Cross-validated accuracy grid");
  common(cv);
  cv->add_option("--method", o.method, "Fit method")->check(CLI::IsMember(cli_detail::kSolveMethods));
  cv->add_option("--folds", o.folds, "Number of folds");
  cv->add_option("--C-grid", o.C_grid, "C values (default 1e-3 .. 1e3)")->delimiter(',');
  cv->add_option("--B-grid", o.B_grid, "B values (default --B)")->delimiter(',');
  cv->add_option("--seed", o.seed, "Fold shuffling seed");

  CLI::App* oracle = app.add_subcommand("oracle", "Verify solvers against enumeration (n <= 20)");
  common(oracle);
  oracle->add_option("--C-grid", o.C_grid, "C values (default 0.1,1,10)")->delimiter(',');
  oracle->add_option("--B-grid", o.B_grid, "B values (default 1..n)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*solve) return cmd_solve(o, out);
    if (*relax) return cmd_relax(o, out);
    if (*cv) return cmd_cv(o, out);
    return cmd_oracle(o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const GuardExceeded& e) {
    err << "guard exceeded: " << e.what() << "\n";
    return kExitGuard;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"sparse-svm"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace sparse_svm::cli
