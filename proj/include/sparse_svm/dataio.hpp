#pragma once

#include "sparse_svm/core.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace sparse_svm {

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long row, long col)
      : Error(what + " (row " + std::to_string(row) + ", column " + std::to_string(col) + ")"),
        row_(row),
        col_(col) {}
  long row() const { return row_; }
  long col() const { return col_; }

 private:
  long row_, col_;
};

/// Label column does not describe a binary problem.
class SingleClassError : public Error {
 public:
  enum class Variant { kSingleClass, kNotBinary };
  SingleClassError(const std::string& what, Variant v) : Error(what), variant_(v) {}
  Variant variant() const { return variant_; }

 private:
  Variant variant_;
};

class MissingValueError : public Error {
 public:
  MissingValueError(long row, long col)
      : Error("missing value at row " + std::to_string(row) + ", column " + std::to_string(col)),
        row_(row),
        col_(col) {}
  long row() const { return row_; }
  long col() const { return col_; }

 private:
  long row_, col_;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class TooFewSamples : public Error {
 public:
  using Error::Error;
};

namespace io_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> to_double(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  const char* first = s.data();
  if (*first == '+') ++first;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline bool is_missing(const std::string& raw) {
  const std::string s = trim(raw);
  return s.empty() || s == "?" || s == "NA" || s == "na" || s == "NaN" || s == "nan";
}

/// RFC-4180 records: quoted fields, doubled quotes, CRLF or LF line ends,
/// newlines inside quotes.
inline std::vector<std::vector<std::string>> read_csv_records(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, field_started = false, any = false;
  long line = 1;
  char c;
  auto end_field = [&] {
    record.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && trim(record[0]).empty())) records.push_back(record);
    record.clear();
  };
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started && trim(field).empty()) {
      quoted = true;
      field_started = true;
      field.clear();
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      end_record();
      ++line;
    } else if (c == '\n') {
      end_record();
      ++line;
    } else {
      field += c;
      if (c != ' ' && c != '\t') field_started = true;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", line, static_cast<long>(record.size()) + 1);
  if (any && (!field.empty() || !record.empty())) end_record();
  return records;
}

inline Eigen::VectorXd map_labels(const std::vector<std::string>& raw,
                                  const std::optional<std::string>& positive_label) {
  std::vector<std::string> distinct;
  for (const auto& r : raw)
    if (std::find(distinct.begin(), distinct.end(), r) == distinct.end()) distinct.push_back(r);
  if (distinct.size() < 2)
    throw SingleClassError("label column has a single class", SingleClassError::Variant::kSingleClass);
  if (distinct.size() > 2)
    throw SingleClassError("label column has " + std::to_string(distinct.size()) + " distinct values",
                           SingleClassError::Variant::kNotBinary);
  std::string pos;
  if (positive_label) {
    pos = *positive_label;
    if (pos != distinct[0] && pos != distinct[1])
      throw SingleClassError("positive label '" + pos + "' does not occur",
                             SingleClassError::Variant::kSingleClass);
  } else {
    // Numeric labels: the larger value is positive; otherwise the first seen.
    auto a = to_double(distinct[0]), b = to_double(distinct[1]);
    pos = (a && b) ? (*a > *b ? distinct[0] : distinct[1]) : distinct[0];
  }
  Eigen::VectorXd y(static_cast<Eigen::Index>(raw.size()));
  for (std::size_t i = 0; i < raw.size(); ++i) y[static_cast<Eigen::Index>(i)] = raw[i] == pos ? 1.0 : -1.0;
  return y;
}

}  // namespace io_detail

/// Which column holds the label: header name or 0-based index; empty means last.
struct LabelColumn {
  std::optional<std::string> name;
  std::optional<int> index;
};

inline Dataset load_csv(std::istream& in, const LabelColumn& label = {},
                        const std::optional<std::string>& positive_label = std::nullopt,
                        const std::string& source = "csv") {
  auto records = io_detail::read_csv_records(in);
  if (records.empty()) throw ParseError("missing header row", 1, 1);
  std::vector<std::string> header = records.front();
  for (auto& h : header) h = io_detail::trim(h);
  const long width = static_cast<long>(header.size());
  if (width < 2) throw ParseError("need at least one feature column and a label column", 1, 1);
  int label_col = static_cast<int>(width) - 1;
  if (label.index) {
    if (*label.index < 0 || *label.index >= width) throw InvalidArgument("label column index out of range");
    label_col = *label.index;
  } else if (label.name) {
    auto it = std::find(header.begin(), header.end(), *label.name);
    if (it == header.end()) {
      // Allow a numeric string as an index.
      auto idx = io_detail::to_double(*label.name);
      if (!idx || *idx < 0 || *idx >= width || std::floor(*idx) != *idx)
        throw InvalidArgument("label column '" + *label.name + "' not found");
      label_col = static_cast<int>(*idx);
    } else {
      label_col = static_cast<int>(it - header.begin());
    }
  }
  const long m = static_cast<long>(records.size()) - 1;
  if (m < 1) throw ParseError("no data rows", 2, 1);
  Eigen::MatrixXd X(m, width - 1);
  std::vector<std::string> raw_labels;
  std::vector<std::string> names;
  for (long c = 0; c < width; ++c)
    if (c != label_col) names.push_back(header[c]);
  for (long r = 0; r < m; ++r) {
    const auto& rec = records[r + 1];
    const long file_row = r + 2;
    if (static_cast<long>(rec.size()) != width)
      throw ParseError("expected " + std::to_string(width) + " fields, found " + std::to_string(rec.size()),
                       file_row, std::min<long>(static_cast<long>(rec.size()), width) + 1);
    long out = 0;
    for (long c = 0; c < width; ++c) {
      if (c == label_col) {
        if (io_detail::is_missing(rec[c])) throw MissingValueError(file_row, c + 1);
        raw_labels.push_back(io_detail::trim(rec[c]));
        continue;
      }
      if (io_detail::is_missing(rec[c])) throw MissingValueError(file_row, c + 1);
      auto v = io_detail::to_double(rec[c]);
      if (!v || !std::isfinite(*v)) throw ParseError("not a number: '" + rec[c] + "'", file_row, c + 1);
      X(r, out++) = *v;
    }
  }
  Eigen::VectorXd y = io_detail::map_labels(raw_labels, positive_label);
  return Dataset(std::move(X), std::move(y), std::move(names), Provenance{source, "none"});
}

inline Dataset load_csv(const std::string& path, const LabelColumn& label = {},
                        const std::optional<std::string>& positive_label = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return load_csv(in, label, positive_label, path);
}

/// Parsed rows before the two-class check of Dataset.
struct SampleTable {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

/// "<label> idx:val ..." with 1-based indices. Numeric labels map > 0 to +1 and
/// everything else to -1; string labels use the first one seen as positive.
inline SampleTable parse_libsvm(std::istream& in, std::optional<int> n_hint = std::nullopt) {
  std::vector<std::string> labels;
  std::vector<std::vector<std::pair<int, double>>> rows;
  std::string line;
  long lineno = 0;
  int width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    labels.push_back(tok);
    std::vector<std::pair<int, double>> entries;
    long col = 1;
    while (ls >> tok) {
      ++col;
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError("expected idx:value, got '" + tok + "'", lineno, col);
      auto idx = io_detail::to_double(tok.substr(0, colon));
      auto val = io_detail::to_double(tok.substr(colon + 1));
      if (!idx || *idx < 1 || std::floor(*idx) != *idx) throw ParseError("bad index '" + tok + "'", lineno, col);
      if (!val || !std::isfinite(*val)) throw ParseError("bad value '" + tok + "'", lineno, col);
      const int j = static_cast<int>(*idx);
      if (n_hint && j > *n_hint)
        throw IndexError("index " + std::to_string(j) + " exceeds n_hint " + std::to_string(*n_hint) +
                         " on line " + std::to_string(lineno));
      width = std::max(width, j);
      entries.emplace_back(j - 1, *val);
    }
    rows.push_back(std::move(entries));
  }
  if (rows.empty()) throw ParseError("no samples", 1, 1);
  if (n_hint) width = std::max(width, *n_hint);
  if (width < 1) width = 1;
  SampleTable t;
  t.X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (auto [j, v] : rows[i]) t.X(static_cast<Eigen::Index>(i), j) = v;

  bool numeric = true;
  for (const auto& l : labels) numeric = numeric && io_detail::to_double(l).has_value();
  t.y.resize(static_cast<Eigen::Index>(labels.size()));
  if (numeric) {
    for (std::size_t i = 0; i < labels.size(); ++i)
      t.y[static_cast<Eigen::Index>(i)] = *io_detail::to_double(labels[i]) > 0.0 ? 1.0 : -1.0;
  } else {
    std::vector<std::string> distinct;
    for (const auto& l : labels)
      if (std::find(distinct.begin(), distinct.end(), l) == distinct.end()) distinct.push_back(l);
    if (distinct.size() > 2)
      throw SingleClassError("label column has " + std::to_string(distinct.size()) + " distinct values",
                             SingleClassError::Variant::kNotBinary);
    for (std::size_t i = 0; i < labels.size(); ++i)
      t.y[static_cast<Eigen::Index>(i)] = labels[i] == distinct[0] ? 1.0 : -1.0;
  }
  return t;
}

inline Dataset load_libsvm(std::istream& in, std::optional<int> n_hint = std::nullopt,
                           const std::string& source = "libsvm") {
  SampleTable t = parse_libsvm(in, n_hint);
  if ((t.y.array() > 0).all() || (t.y.array() < 0).all())
    throw SingleClassError("file has a single class", SingleClassError::Variant::kSingleClass);
  return Dataset(std::move(t.X), std::move(t.y), {}, Provenance{source, "none"});
}

inline Dataset load_libsvm(const std::string& path, std::optional<int> n_hint = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return load_libsvm(in, n_hint, path);
}

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

/// Per-column affine map x -> (x - mean) / scale; constant columns map to 0.
struct ScalingRecord {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  std::vector<bool> constant;

  Dataset apply(const Dataset& data) const {
    if (data.n() != mean.size()) throw DimensionMismatch("scaling record has wrong width");
    Eigen::MatrixXd X = data.X();
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if (constant[static_cast<std::size_t>(j)])
        X.col(j).setZero();
      else
        X.col(j) = (X.col(j).array() - mean[j]) / scale[j];
    }
    Provenance p = data.provenance();
    p.preprocessing = "standardized (population sd)";
    return Dataset(std::move(X), data.y(), data.feature_names(), p);
  }
};

inline std::pair<Dataset, ScalingRecord> standardize(const Dataset& data) {
  if (data.m() < 2) throw InvalidArgument("standardize needs at least two samples");
  ScalingRecord rec;
  const auto n = data.n();
  const double m = static_cast<double>(data.m());
  rec.mean = data.X().colwise().sum().transpose() / m;
  rec.scale.resize(n);
  rec.constant.assign(static_cast<std::size_t>(n), false);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double var = (data.X().col(j).array() - rec.mean[j]).square().sum() / m;
    const double sd = std::sqrt(var);
    if (!(sd > 1e-12 * (1.0 + std::abs(rec.mean[j])))) {
      rec.constant[static_cast<std::size_t>(j)] = true;
      rec.scale[j] = 1.0;
    } else {
      rec.scale[j] = sd;
    }
  }
  return {rec.apply(data), rec};
}

// ---------------------------------------------------------------------------
// Folds
// ---------------------------------------------------------------------------

struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;
  unsigned seed = 0;
  bool stratified = true;

  std::vector<int> test_indices(int fold) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] == fold) out.push_back(static_cast<int>(i));
    return out;
  }
  std::vector<int> train_indices(int fold) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] != fold) out.push_back(static_cast<int>(i));
    return out;
  }
};

/// Each class is shuffled with the seed and dealt round-robin; the negative
/// class continues where the positives stopped so fold sizes stay balanced.
inline FoldPlan stratified_folds(const Dataset& data, int k, unsigned seed) {
  if (k < 2) throw InvalidArgument("k must be at least 2");
  // Folds may lack a class, but every training split keeps both: a class of
  // size c >= 2 puts at most ceil(c / k) <= c - 1 samples in any one fold.
  const auto pos = data.positives(), neg = data.negatives();
  if (k > data.m())
    throw TooFewSamples("k = " + std::to_string(k) + " exceeds the sample count " + std::to_string(data.m()));
  if (std::min(pos, neg) < 2)
    throw TooFewSamples("each class needs at least two samples for cross-validation");
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(static_cast<std::size_t>(data.m()), -1);
  std::mt19937 rng(seed);
  int next = 0;
  for (double label : {1.0, -1.0}) {
    std::vector<int> idx;
    for (Eigen::Index i = 0; i < data.m(); ++i)
      if (data.y()[i] == label) idx.push_back(static_cast<int>(i));
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int i : idx) {
      plan.assignments[static_cast<std::size_t>(i)] = next;
      next = (next + 1) % k;
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct ResultRecord {
  std::string dataset;
  std::string method;
  double C = 0.0;
  int B = 0;
  std::optional<double> M;
  std::optional<double> obj;
  std::optional<double> lb;
  std::optional<double> ub;
  std::optional<double> gap;
  double time_s = 0.0;
  std::vector<int> features;
  std::optional<double> acc_train;
  std::optional<double> acc_val;
  std::string status;
  std::string preprocessing;

  static constexpr int kSchema = 1;

  /// Recomputes gap from the bounds when both are finite.
  void sync_gap() {
    if (lb && ub && std::isfinite(*lb) && std::isfinite(*ub)) gap = relative_gap(*ub, *lb);
  }

  nlohmann::json to_json() const {
    auto opt = [](const std::optional<double>& v) -> nlohmann::json {
      if (!v || !std::isfinite(*v)) return nullptr;
      return *v;
    };
    nlohmann::json j;
    j["dataset"] = dataset;
    j["method"] = method;
    j["C"] = C;
    j["B"] = B;
    j["M"] = opt(M);
    j["obj"] = opt(obj);
    j["lb"] = opt(lb);
    j["ub"] = opt(ub);
    j["gap"] = opt(gap);
    j["time_s"] = time_s;
    j["features"] = features;
    j["acc_train"] = opt(acc_train);
    j["acc_val"] = opt(acc_val);
    j["status"] = status;
    j["preprocessing"] = preprocessing;
    j["schema"] = kSchema;
    return j;
  }

  static ResultRecord from_json(const nlohmann::json& j) {
    if (j.value("schema", 0) != kSchema) throw ParseError("unsupported result schema", 1, 1);
    auto opt = [&j](const char* key) -> std::optional<double> {
      if (!j.contains(key) || j[key].is_null()) return std::nullopt;
      return j[key].get<double>();
    };
    ResultRecord r;
    r.dataset = j.at("dataset").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.C = j.at("C").get<double>();
    r.B = j.at("B").get<int>();
    r.M = opt("M");
    r.obj = opt("obj");
    r.lb = opt("lb");
    r.ub = opt("ub");
    r.gap = opt("gap");
    r.time_s = j.at("time_s").get<double>();
    r.features = j.at("features").get<std::vector<int>>();
    r.acc_train = opt("acc_train");
    r.acc_val = opt("acc_val");
    r.status = j.value("status", "");
    r.preprocessing = j.value("preprocessing", "");
    return r;
  }

  static std::string csv_header() {
    return "dataset,method,C,B,M,obj,lb,ub,gap,time_s,n_features,features,acc_train,acc_val,status";
  }

  std::string csv_row() const {
    auto num = [](const std::optional<double>& v) {
      if (!v || !std::isfinite(*v)) return std::string();
      std::ostringstream os;
      os.precision(12);
      os << *v;
      return os.str();
    };
    auto quote = [](const std::string& s) {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      return q + "\"";
    };
    std::string feats;
    for (std::size_t i = 0; i < features.size(); ++i) feats += (i ? " " : "") + std::to_string(features[i]);
    std::ostringstream os;
    os << quote(dataset) << ',' << quote(method) << ',' << num(C) << ',' << B << ',' << num(M) << ','
       << num(obj) << ',' << num(lb) << ',' << num(ub) << ',' << num(gap) << ',' << num(time_s) << ','
       << features.size() << ',' << quote(feats) << ',' << num(acc_train) << ',' << num(acc_val) << ','
       << quote(status);
    return os.str();
  }
};

inline void write_result_json(const ResultRecord& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << r.to_json().dump(2) << "\n";
}

/// Appends one row; writes the header first when the file is new or empty.
inline void append_result_csv(const ResultRecord& r, const std::string& path) {
  bool fresh = true;
  {
    std::ifstream probe(path, std::ios::ate);
    if (probe && probe.tellg() > 0) fresh = false;
  }
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot write " + path);
  if (fresh) out << ResultRecord::csv_header() << "\n";
  out << r.csv_row() << "\n";
}

}  // namespace sparse_svm
