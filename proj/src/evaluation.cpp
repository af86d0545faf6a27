#include "cellsift/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "cellsift/error.hpp"
#include "json.hpp"

namespace cellsift {

Label oracle_label(const Table& dirty, const GroundTruth& truth, CellRef cell, int iteration) {
  dirty.check_bounds(cell);
  Label label;
  label.cell = cell;
  label.value = dirty.at(cell) != truth.at(cell) ? LabelValue::Erroneous : LabelValue::Correct;
  label.source = LabelSource::Oracle;
  label.iteration = iteration;
  return label;
}

std::vector<CellRef> true_errors(const Table& dirty, const GroundTruth& truth) {
  std::vector<CellRef> out;
  for (std::size_t i = 0; i < dirty.n_rows(); ++i) {
    for (std::size_t j = 0; j < dirty.n_cols(); ++j) {
      if (dirty.at(i, j) != truth.at({i, j})) out.push_back({i, j});
    }
  }
  return out;
}

DetectionResult score_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  DetectionResult r;
  r.true_positives = tp;
  r.false_positives = fp;
  r.false_negatives = fn;
  r.precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  r.recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  r.f1 = r.precision + r.recall == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

DetectionResult score(std::span<const CellRef> predicted, const GroundTruth& truth, const Table& dirty) {
  std::set<CellRef> unique(predicted.begin(), predicted.end());
  std::size_t tp = 0, fp = 0;
  for (const auto& cell : unique) {
    dirty.check_bounds(cell);
    (dirty.at(cell) != truth.at(cell) ? tp : fp) += 1;
  }
  const std::size_t actual = true_errors(dirty, truth).size();
  return score_counts(tp, fp, actual - tp);
}

DetectionResult score_column(std::span<const CellRef> predicted, const GroundTruth& truth, const Table& dirty,
                             std::size_t col) {
  dirty.check_bounds({0, col});
  std::set<CellRef> unique;
  for (const auto& c : predicted) {
    if (c.col == col) unique.insert(c);
  }
  std::size_t tp = 0, fp = 0, actual = 0;
  for (const auto& cell : unique) {
    dirty.check_bounds(cell);
    (dirty.at(cell) != truth.at(cell) ? tp : fp) += 1;
  }
  for (std::size_t i = 0; i < dirty.n_rows(); ++i) actual += dirty.at(i, col) != truth.at({i, col});
  return score_counts(tp, fp, actual - tp);
}

const char* to_string(ErrorType t) noexcept {
  switch (t) {
    case ErrorType::Typo: return "typo";
    case ErrorType::Missing: return "missing";
    case ErrorType::FormatViolation: return "format";
    case ErrorType::CrossColumnViolation: return "cross_column";
    case ErrorType::CorrelatedPair: return "correlated_pair";
  }
  return "typo";
}

ErrorType parse_error_type(std::string_view s) {
  if (s == "typo") return ErrorType::Typo;
  if (s == "missing") return ErrorType::Missing;
  if (s == "format") return ErrorType::FormatViolation;
  if (s == "cross_column") return ErrorType::CrossColumnViolation;
  if (s == "correlated_pair") return ErrorType::CorrelatedPair;
  throw Error(ErrorCode::BadPlan, "unknown error type '" + std::string(s) + "'");
}

std::string InjectionPlan::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  auto& cols = j["columns"] = nlohmann::ordered_json::array();
  for (const auto& c : columns) {
    nlohmann::ordered_json cj;
    cj["column"] = c.column;
    cj["rate"] = c.rate;
    auto& types = cj["types"] = nlohmann::ordered_json::array();
    for (auto t : c.types) types.push_back(cellsift::to_string(t));
    cj["markers"] = c.markers;
    cols.push_back(std::move(cj));
  }
  auto& rules_j = j["rules"] = nlohmann::ordered_json::array();
  for (const auto& r : rules) rules_j.push_back({{"determinant", r.determinant}, {"dependent", r.dependent}});
  auto& pairs_j = j["pairs"] = nlohmann::ordered_json::array();
  for (const auto& p : pairs) {
    nlohmann::ordered_json pj;
    pj["columns"] = {p.first, p.second};
    pj["rate"] = p.rate;
    pj["types"] = {cellsift::to_string(p.first_type), cellsift::to_string(p.second_type)};
    pairs_j.push_back(std::move(pj));
  }
  return j.dump(2);
}

InjectionPlan InjectionPlan::from_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    InjectionPlan plan;
    plan.seed = j.value("seed", std::uint64_t{1});
    for (const auto& cj : j.value("columns", nlohmann::json::array())) {
      ColumnInjection c;
      c.column = cj.at("column").get<std::string>();
      c.rate = cj.at("rate").get<double>();
      if (cj.contains("types")) {
        c.types.clear();
        for (const auto& t : cj.at("types")) c.types.push_back(parse_error_type(t.get<std::string>()));
      }
      c.markers = cj.value("markers", std::string("$:"));
      plan.columns.push_back(std::move(c));
    }
    for (const auto& rj : j.value("rules", nlohmann::json::array())) {
      plan.rules.push_back({rj.at("determinant").get<std::string>(), rj.at("dependent").get<std::string>()});
    }
    for (const auto& pj : j.value("pairs", nlohmann::json::array())) {
      PairInjection p;
      const auto& cols = pj.at("columns");
      if (!cols.is_array() || cols.size() != 2) throw Error(ErrorCode::BadPlan, "a pair names exactly two columns");
      p.first = cols[0].get<std::string>();
      p.second = cols[1].get<std::string>();
      p.rate = pj.at("rate").get<double>();
      if (pj.contains("types")) {
        const auto& types = pj.at("types");
        if (!types.is_array() || types.size() != 2) throw Error(ErrorCode::BadPlan, "pair types must list two error types");
        p.first_type = parse_error_type(types[0].get<std::string>());
        p.second_type = parse_error_type(types[1].get<std::string>());
      }
      plan.pairs.push_back(std::move(p));
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadPlan, std::string("injection plan: ") + e.what());
  }
}

InjectionPlan InjectionPlan::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string typo(const std::string& value, Rng& rng) {
  static constexpr std::string_view kAlphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
  auto random_char = [&] { return kAlphabet[rng.below(kAlphabet.size())]; };
  for (;;) {
    std::string out = value;
    const std::uint64_t op = value.empty() ? 2 : rng.below(3);
    if (op == 0) {
      out[rng.below(out.size())] = random_char();
    } else if (op == 1) {
      out.erase(rng.below(out.size()), 1);
    } else {
      out.insert(out.begin() + static_cast<std::ptrdiff_t>(rng.below(out.size() + 1)), random_char());
    }
    if (out != value) return out;
  }
}

namespace {

std::size_t column_index(const Table& table, const std::string& name) {
  for (std::size_t j = 0; j < table.n_cols(); ++j) {
    if (table.column_name(j) == name) return j;
  }
  throw Error(ErrorCode::BadPlan, "plan names unknown column '" + name + "'");
}

void check_rate(double rate, const std::string& what) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw Error(ErrorCode::BadPlan, what + " rate must lie in [0,1]");
}

class Mutator {
 public:
  Mutator(const Table& clean, const InjectionPlan& plan, Rng& rng) : clean_(clean), rng_(rng) {
    for (const auto& rule : plan.rules) {
      const auto det = column_index(clean, rule.determinant);
      const auto dep = column_index(clean, rule.dependent);
      if (det == dep) throw Error(ErrorCode::BadPlan, "a rule needs two distinct columns");
      determinant_of_[dep] = det;
    }
    for (const auto& c : plan.columns) {
      markers_[column_index(clean, c.column)] = c.markers;
    }
  }

  bool has_rule(std::size_t col) const { return determinant_of_.contains(col); }

  std::string mutate(std::size_t row, std::size_t col, ErrorType type) {
    const std::string& value = clean_.at(row, col);
    switch (type) {
      case ErrorType::Missing:
        if (!value.empty()) return "";
        break;
      case ErrorType::FormatViolation: {
        auto it = markers_.find(col);
        const std::string markers = it == markers_.end() ? "$:" : it->second;
        std::string out;
        for (char ch : value) {
          if (markers.find(ch) == std::string::npos) out.push_back(ch);
        }
        if (out != value) return out;
        break;
      }
      case ErrorType::CrossColumnViolation: {
        if (auto v = violating_value(row, col)) return *v;
        break;
      }
      case ErrorType::Typo:
      case ErrorType::CorrelatedPair:
        break;
    }
    return typo(value, rng_);
  }

 private:
  // A value of `col` that never co-occurs with this row's determinant value.
  std::optional<std::string> violating_value(std::size_t row, std::size_t col) {
    auto it = determinant_of_.find(col);
    if (it == determinant_of_.end()) return std::nullopt;
    const std::size_t det = it->second;
    auto& domain = domain_[col];
    if (domain.empty()) {
      std::set<std::string> values;
      for (std::size_t i = 0; i < clean_.n_rows(); ++i) values.insert(clean_.at(i, col));
      domain.assign(values.begin(), values.end());
      for (std::size_t i = 0; i < clean_.n_rows(); ++i) {
        seen_[col].insert({clean_.at(i, det), clean_.at(i, col)});
      }
    }
    std::vector<const std::string*> candidates;
    for (const auto& v : domain) {
      if (!seen_[col].contains({clean_.at(row, det), v})) candidates.push_back(&v);
    }
    if (candidates.empty()) return std::nullopt;
    return *candidates[rng_.below(candidates.size())];
  }

  const Table& clean_;
  Rng& rng_;
  std::map<std::size_t, std::size_t> determinant_of_;
  std::map<std::size_t, std::string> markers_;
  std::map<std::size_t, std::vector<std::string>> domain_;
  std::map<std::size_t, std::set<std::pair<std::string, std::string>>> seen_;
};

std::size_t target_count(double rate, std::size_t n) {
  return static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
}

}  // namespace

Injection inject_errors(const Table& clean, const InjectionPlan& plan) {
  const std::size_t n = clean.n_rows();
  const std::size_t m = clean.n_cols();
  Rng rng(derive_seed(plan.seed, {0x1A7EC7ULL}));
  Mutator mutator(clean, plan, rng);

  for (const auto& c : plan.columns) {
    check_rate(c.rate, "column '" + c.column + "'");
    const auto col = column_index(clean, c.column);
    if (c.types.empty()) throw Error(ErrorCode::BadPlan, "column '" + c.column + "' lists no error types");
    for (auto t : c.types) {
      if (t == ErrorType::CorrelatedPair) {
        throw Error(ErrorCode::BadPlan, "correlated_pair is declared under \"pairs\", not per column");
      }
      if (t == ErrorType::CrossColumnViolation && !mutator.has_rule(col)) {
        throw Error(ErrorCode::BadPlan, "cross_column errors in '" + c.column + "' need a rule naming it as dependent");
      }
    }
  }

  std::vector<std::vector<std::string>> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = clean.row(i);
  std::vector<std::vector<char>> touched(m, std::vector<char>(n, 0));

  for (const auto& p : plan.pairs) {
    check_rate(p.rate, "pair");
    const auto a = column_index(clean, p.first);
    const auto b = column_index(clean, p.second);
    if (a == b) throw Error(ErrorCode::BadPlan, "a correlated pair needs two distinct columns");
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n; ++i) {
      if (!touched[a][i] && !touched[b][i]) candidates.push_back(i);
    }
    rng.shuffle(candidates);
    candidates.resize(std::min(candidates.size(), target_count(p.rate, n)));
    std::sort(candidates.begin(), candidates.end());
    for (auto i : candidates) {
      rows[i][a] = mutator.mutate(i, a, p.first_type);
      rows[i][b] = mutator.mutate(i, b, p.second_type);
      touched[a][i] = touched[b][i] = 1;
    }
  }

  for (const auto& c : plan.columns) {
    const auto col = column_index(clean, c.column);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n; ++i) {
      if (!touched[col][i]) candidates.push_back(i);
    }
    rng.shuffle(candidates);
    candidates.resize(std::min(candidates.size(), target_count(c.rate, n)));
    std::sort(candidates.begin(), candidates.end());
    for (auto i : candidates) {
      const ErrorType type = c.types[rng.below(c.types.size())];
      rows[i][col] = mutator.mutate(i, col, type);
      touched[col][i] = 1;
    }
  }

  Table dirty(clean.schema(), std::move(rows));
  GroundTruth truth = attach_ground_truth(dirty, clean);
  auto mutated = true_errors(dirty, truth);
  return Injection{std::move(dirty), std::move(truth), std::move(mutated)};
}

std::vector<ConvergencePoint> curve_from_run_log(std::string_view jsonl) {
  std::vector<ConvergencePoint> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      if (!j.contains("global") || j.at("global").is_null()) continue;
      const auto& g = j.at("global");
      out.push_back({j.at("labels_used").get<std::size_t>(), g.at("precision").get<double>(),
                     g.at("recall").get<double>(), g.at("f1").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Decode, std::string("run log: ") + e.what());
    }
  }
  return out;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - out.mean) * (v - out.mean);
  out.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return out;
}

std::vector<AggregatePoint> record_convergence(std::span<const std::vector<ConvergencePoint>> runs) {
  if (runs.empty()) throw Error(ErrorCode::EmptyLog, "no run logs given");
  std::size_t start = 0;
  std::set<std::size_t> grid;
  for (const auto& run : runs) {
    if (run.empty()) throw Error(ErrorCode::EmptyLog, "a run log has no convergence points");
    start = std::max(start, run.front().labels_used);
    for (const auto& p : run) grid.insert(p.labels_used);
  }
  std::vector<AggregatePoint> out;
  for (std::size_t x : grid) {
    if (x < start) continue;
    std::vector<double> f1, p, r;
    for (const auto& run : runs) {
      // last observation at or before x
      auto it = std::upper_bound(run.begin(), run.end(), x,
                                 [](std::size_t v, const ConvergencePoint& pt) { return v < pt.labels_used; });
      const auto& obs = *std::prev(it);
      f1.push_back(obs.f1);
      p.push_back(obs.precision);
      r.push_back(obs.recall);
    }
    const auto sf = mean_std(f1), sp = mean_std(p), sr = mean_std(r);
    out.push_back({x, sf.mean, sf.stddev, sp.mean, sp.stddev, sr.mean, sr.stddev});
  }
  return out;
}

std::string convergence_csv(std::span<const AggregatePoint> points) {
  std::ostringstream os;
  os.precision(17);
  os << "labels_used,mean_f1,std_f1,mean_p,mean_r\n";
  for (const auto& p : points) {
    os << p.labels_used << ',' << p.mean_f1 << ',' << p.std_f1 << ',' << p.mean_precision << ','
       << p.mean_recall << '\n';
  }
  return os.str();
}

}  // namespace cellsift
