#include "cellsift/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cellsift/error.hpp"
#include "cellsift/parallel.hpp"
#include "json.hpp"

namespace cellsift {

std::vector<Hyperparams> default_grid() {
  std::vector<Hyperparams> grid;
  for (std::size_t depth : {4, 8, 16}) {
    for (std::size_t leaf : {1, 5}) grid.push_back({depth, leaf});
  }
  return grid;
}

const TreeNode& DecisionTree::leaf(std::span<const double> x) const {
  if (nodes_.empty()) throw Error(ErrorCode::NotTrained, "tree has no nodes");
  const TreeNode* node = &nodes_.front();
  while (!node->is_leaf()) {
    node = &nodes_[x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right];
  }
  return *node;
}

std::vector<std::size_t> DecisionTree::path(std::span<const double> x) const {
  if (nodes_.empty()) throw Error(ErrorCode::NotTrained, "tree has no nodes");
  std::vector<std::size_t> out{0};
  while (!nodes_[out.back()].is_leaf()) {
    const auto& node = nodes_[out.back()];
    out.push_back(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
  }
  return out;
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  // (node, depth) walk
  std::size_t best = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [idx, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (!nodes_[idx].is_leaf()) {
      stack.emplace_back(nodes_[idx].left, d + 1);
      stack.emplace_back(nodes_[idx].right, d + 1);
    }
  }
  return best;
}

std::array<double, 2> balanced_class_weights(std::span<const int> labels) {
  const double n = static_cast<double>(labels.size());
  const double pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double neg = n - pos;
  return {neg > 0 ? n / (2.0 * neg) : 1.0, pos > 0 ? n / (2.0 * pos) : 1.0};
}

namespace {

double gini(double e, double c) {
  const double w = e + c;
  if (w <= 0.0) return 0.0;
  const double pe = e / w;
  const double pc = c / w;
  return 1.0 - pe * pe - pc * pc;
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, std::span<const int> labels, const std::array<double, 2>& weights,
              const TreeParams& params, std::span<const std::size_t> candidate_features, Rng& rng)
      : X_(X), labels_(labels), weights_(weights), params_(params), features_(candidate_features), rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> samples) {
    grow(std::move(samples), 0);
    return DecisionTree(std::move(nodes_));
  }

 private:
  std::size_t grow(std::vector<std::size_t> samples, std::size_t depth) {
    double e = 0.0, c = 0.0;
    for (auto s : samples) (labels_[s] == 1 ? e : c) += weights_[static_cast<std::size_t>(labels_[s])];

    const std::size_t index = nodes_.size();
    nodes_.push_back(TreeNode{-1, 0.0, 0, 0, e, c});

    const std::size_t min_leaf = std::max<std::size_t>(1, params_.hyper.min_leaf);
    if (depth >= params_.hyper.max_depth || e == 0.0 || c == 0.0 || samples.size() < 2 * min_leaf) return index;

    const SplitChoice split = best_split(samples, e, c, min_leaf);
    if (split.feature < 0) return index;

    std::vector<std::size_t> left, right;
    const auto f = static_cast<std::size_t>(split.feature);
    for (auto s : samples) (X_(s, f) <= split.threshold ? left : right).push_back(s);
    samples.clear();
    samples.shrink_to_fit();

    const std::size_t l = grow(std::move(left), depth + 1);
    const std::size_t r = grow(std::move(right), depth + 1);
    auto& node = nodes_[index];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return index;
  }

  SplitChoice best_split(const std::vector<std::size_t>& samples, double e, double c, std::size_t min_leaf) {
    // Draw features in random order until enough non-constant ones are found.
    const std::size_t want = params_.max_features == 0 ? features_.size() : params_.max_features;
    std::vector<std::size_t> order(features_.begin(), features_.end());
    std::vector<std::size_t> chosen;
    std::size_t remaining = order.size();
    while (chosen.size() < want && remaining > 0) {
      const std::size_t pick = static_cast<std::size_t>(rng_.below(remaining));
      const std::size_t f = order[pick];
      std::swap(order[pick], order[remaining - 1]);
      --remaining;
      const double first = X_(samples.front(), f);
      bool varies = false;
      for (auto s : samples) {
        if (X_(s, f) != first) {
          varies = true;
          break;
        }
      }
      if (varies) chosen.push_back(f);
    }
    std::sort(chosen.begin(), chosen.end());

    const double parent = gini(e, c);
    const double total = e + c;
    SplitChoice best;
    std::vector<std::pair<double, std::size_t>> values(samples.size());
    for (auto f : chosen) {
      for (std::size_t k = 0; k < samples.size(); ++k) values[k] = {X_(samples[k], f), samples[k]};
      std::sort(values.begin(), values.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double le = 0.0, lc = 0.0;
      for (std::size_t k = 0; k + 1 < values.size(); ++k) {
        const std::size_t s = values[k].second;
        (labels_[s] == 1 ? le : lc) += weights_[static_cast<std::size_t>(labels_[s])];
        if (values[k].first == values[k + 1].first) continue;
        const std::size_t n_left = k + 1;
        if (n_left < min_leaf || values.size() - n_left < min_leaf) continue;
        const double wl = le + lc;
        const double wr = total - wl;
        const double gain = parent - (wl / total) * gini(le, lc) - (wr / total) * gini(e - le, c - lc);
        if (gain > best.gain + 1e-12) {
          double mid = values[k].first + (values[k + 1].first - values[k].first) / 2.0;
          if (!(mid < values[k + 1].first)) mid = values[k].first;
          best = {static_cast<int>(f), mid, gain};
        }
      }
    }
    return best;
  }

  const Matrix& X_;
  std::span<const int> labels_;
  std::array<double, 2> weights_;
  const TreeParams& params_;
  std::span<const std::size_t> features_;
  Rng& rng_;
  std::vector<TreeNode> nodes_;
};

std::vector<std::size_t> varying_features(const Matrix& X, std::span<const std::size_t> samples) {
  std::vector<std::size_t> out;
  if (samples.empty()) return out;
  for (std::size_t f = 0; f < X.cols(); ++f) {
    const double first = X(samples.front(), f);
    for (auto s : samples) {
      if (X(s, f) != first) {
        out.push_back(f);
        break;
      }
    }
  }
  return out;
}

void check_labels(const Matrix& X, std::span<const int> labels) {
  if (labels.size() != X.rows()) {
    throw Error(ErrorCode::FeatureLengthMismatch, "got " + std::to_string(labels.size()) + " labels for " +
                                                      std::to_string(X.rows()) + " rows");
  }
  if (labels.empty()) throw Error(ErrorCode::Config, "cannot train on zero labeled examples");
}

}  // namespace

DecisionTree fit_tree(const Matrix& X, std::span<const int> labels, std::span<const std::size_t> samples,
                      const std::array<double, 2>& class_weight, const TreeParams& params, Rng& rng) {
  check_labels(X, labels);
  const auto features = varying_features(X, samples);
  TreeBuilder builder(X, labels, class_weight, params, features, rng);
  return builder.build({samples.begin(), samples.end()});
}

Committee Committee::train(const Matrix& X, std::span<const int> labels, const Hyperparams& hyper,
                           std::uint64_t seed, std::size_t n_trees) {
  check_labels(X, labels);
  if (n_trees == 0) throw Error(ErrorCode::Config, "committee needs at least one tree");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0 || positives == labels.size()) {
    Committee out = constant(positives == 0 ? kSingleClassCorrect : kSingleClassErroneous, X.cols());
    out.hyper_ = hyper;
    out.seed_ = seed;
    return out;
  }

  Committee out;
  out.hyper_ = hyper;
  out.seed_ = seed;
  out.n_features_ = X.cols();

  const std::size_t n = labels.size();
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const auto features = varying_features(X, all);
  const auto weights = balanced_class_weights(labels);
  TreeParams params{hyper, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(X.cols()))))};

  out.trees_.resize(n_trees);
  for (std::size_t t = 0; t < n_trees; ++t) {
    Rng rng(derive_seed(seed, {t}));
    std::vector<std::size_t> bootstrap(n);
    for (auto& b : bootstrap) b = static_cast<std::size_t>(rng.below(n));
    std::sort(bootstrap.begin(), bootstrap.end());
    TreeBuilder builder(X, labels, weights, params, features, rng);
    out.trees_[t] = builder.build(std::move(bootstrap));
  }
  return out;
}

Committee Committee::constant(double p_erroneous, std::size_t n_features) {
  Committee out;
  out.n_features_ = n_features;
  out.constant_ = p_erroneous;
  return out;
}

Committee Committee::from_parts(std::vector<DecisionTree> trees, Hyperparams hyper, std::uint64_t seed,
                                std::size_t n_features, std::optional<double> constant) {
  Committee out;
  out.trees_ = std::move(trees);
  out.hyper_ = hyper;
  out.seed_ = seed;
  out.n_features_ = n_features;
  out.constant_ = constant;
  return out;
}

void Committee::check_width(const Matrix& X) const {
  if (X.cols() != n_features_) {
    throw Error(ErrorCode::FeatureLengthMismatch, "model trained on " + std::to_string(n_features_) +
                                                      " features, input has " + std::to_string(X.cols()));
  }
}

std::vector<double> Committee::predict_proba(const Matrix& X) const {
  check_width(X);
  std::vector<double> out(X.rows(), constant_.value_or(0.0));
  if (constant_) return out;
  const double inv = 1.0 / static_cast<double>(trees_.size());
  for (std::size_t i = 0; i < X.rows(); ++i) {
    auto x = X.row(i);
    double sum = 0.0;
    for (const auto& tree : trees_) sum += tree.probability(x);
    out[i] = sum * inv;
  }
  return out;
}

std::vector<double> Committee::disagreement(const Matrix& X) const {
  check_width(X);
  std::vector<double> out(X.rows(), 0.0);
  if (constant_) return out;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    auto x = X.row(i);
    std::size_t votes = 0;
    for (const auto& tree : trees_) votes += tree.probability(x) >= 0.5 ? 1 : 0;
    out[i] = vote_entropy(static_cast<double>(votes) / static_cast<double>(trees_.size()));
  }
  return out;
}

std::vector<double> certainty(std::span<const double> probabilities) {
  std::vector<double> out(probabilities.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(probabilities[i], 1.0 - probabilities[i]);
  return out;
}

double vote_entropy(double v) {
  auto term = [](double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; };
  return term(v) + term(1.0 - v);
}

double f1_erroneous(std::span<const int> truth, std::span<const int> predicted) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == 1 && truth[i] == 1) ++tp;
    else if (predicted[i] == 1) ++fp;
    else if (truth[i] == 1) ++fn;
  }
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

namespace {

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> fold_of;  // per example
};

FoldPlan stratified_folds(std::span<const int> labels, std::size_t requested, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
  FoldPlan plan;
  const std::size_t minority = std::min(pos.size(), neg.size());
  if (minority < 2 || requested < 2) return plan;
  plan.k = std::min(requested, minority);
  plan.fold_of.assign(labels.size(), 0);
  Rng rng(derive_seed(seed, {0xF01D5ULL}));
  rng.shuffle(pos);
  rng.shuffle(neg);
  for (std::size_t r = 0; r < pos.size(); ++r) plan.fold_of[pos[r]] = r % plan.k;
  for (std::size_t r = 0; r < neg.size(); ++r) plan.fold_of[neg[r]] = r % plan.k;
  return plan;
}

CvReport run_folds(const Matrix& X, std::span<const int> labels, const Hyperparams& hyper, const FoldPlan& plan,
                   std::uint64_t seed, std::size_t n_trees) {
  CvReport report;
  if (plan.k == 0) {
    report.single_class = true;
    return report;
  }
  report.folds = plan.k;
  report.fold_f1.resize(plan.k);
  for (std::size_t fold = 0; fold < plan.k; ++fold) {
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < labels.size(); ++i) (plan.fold_of[i] == fold ? test_idx : train_idx).push_back(i);
    std::vector<int> train_y, test_y;
    for (auto i : train_idx) train_y.push_back(labels[i]);
    for (auto i : test_idx) test_y.push_back(labels[i]);
    const Matrix train_x = X.select_rows(train_idx);
    const Matrix test_x = X.select_rows(test_idx);
    auto model = Committee::train(train_x, train_y, hyper, derive_seed(seed, {0xC0FFEEULL, fold}), n_trees);
    auto proba = model.predict_proba(test_x);
    std::vector<int> predicted(proba.size());
    for (std::size_t i = 0; i < proba.size(); ++i) predicted[i] = proba[i] >= 0.5 ? 1 : 0;
    report.fold_f1[fold] = f1_erroneous(test_y, predicted);
  }
  report.mean_f1 = std::accumulate(report.fold_f1.begin(), report.fold_f1.end(), 0.0) /
                   static_cast<double>(report.folds);
  return report;
}

bool better(const Hyperparams& cand, const CvReport& cand_report, const Hyperparams& best,
            const CvReport& best_report) {
  if (cand_report.mean_f1 != best_report.mean_f1) return cand_report.mean_f1 > best_report.mean_f1;
  if (cand.max_depth != best.max_depth) return cand.max_depth < best.max_depth;
  return cand.min_leaf > best.min_leaf;
}

}  // namespace

CvReport cross_validate(const Matrix& X, std::span<const int> labels, const Hyperparams& hyper, std::size_t folds,
                        std::uint64_t seed, std::size_t n_trees) {
  check_labels(X, labels);
  return run_folds(X, labels, hyper, stratified_folds(labels, folds, seed), seed, n_trees);
}

GridSearchResult grid_search(const Matrix& X, std::span<const int> labels, std::span<const Hyperparams> grid,
                             std::size_t folds, std::uint64_t seed, std::size_t n_trees) {
  if (grid.empty()) throw Error(ErrorCode::Config, "hyperparameter grid is empty");
  check_labels(X, labels);
  const FoldPlan plan = stratified_folds(labels, folds, seed);
  if (plan.k == 0) {
    CvReport report;
    report.single_class = true;
    return {grid.front(), report};
  }
  std::vector<CvReport> reports(grid.size());
  parallel_for(grid.size(), [&](std::size_t g) { reports[g] = run_folds(X, labels, grid[g], plan, seed, n_trees); });
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (better(grid[g], reports[g], grid[best], reports[best])) best = g;
  }
  return {grid[best], reports[best]};
}

DecisionTree train_surrogate(const Matrix& X, std::span<const int> labels, std::size_t max_depth) {
  check_labels(X, labels);
  std::vector<std::size_t> all(labels.size());
  std::iota(all.begin(), all.end(), 0);
  Rng rng(0);  // unused: every varying feature is evaluated
  TreeParams params{{max_depth, 1}, 0};
  return fit_tree(X, labels, all, balanced_class_weights(labels), params, rng);
}

Explanation explain(const DecisionTree& surrogate, std::span<const double> features, const FeatureRegistry& registry) {
  if (surrogate.nodes().empty()) throw Error(ErrorCode::NotTrained, "no surrogate tree trained yet");
  Explanation out;
  const auto path = surrogate.path(features);
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const auto& node = surrogate.nodes()[path[k]];
    const auto f = static_cast<std::size_t>(node.feature);
    ExplanationStep step;
    step.feature = f < registry.size() ? registry.name(f) : "feature#" + std::to_string(f);
    step.comparison = path[k + 1] == node.left ? "<=" : ">";
    step.threshold = node.threshold;
    step.value = features[f];
    out.path.push_back(std::move(step));
  }
  const auto& leaf = surrogate.nodes()[path.back()];
  const double total = leaf.erroneous + leaf.correct;
  out.erroneous_fraction = total > 0 ? leaf.erroneous / total : 0.0;
  out.correct_fraction = total > 0 ? leaf.correct / total : 0.0;
  out.erroneous = leaf.probability() >= 0.5;
  return out;
}

std::string Explanation::render(const std::string& subject) const {
  std::ostringstream os;
  if (!path.empty()) {
    os << "IF ";
    for (std::size_t k = 0; k < path.size(); ++k) {
      if (k) os << " AND ";
      os << path[k].feature << ' ' << path[k].comparison << ' ' << path[k].threshold;
    }
    os << " THEN ";
  }
  os << subject << " is " << (erroneous ? "erroneous" : "correct");
  return os.str();
}

namespace {

constexpr int kModelFormatVersion = 1;

nlohmann::json tree_to_json(const DecisionTree& tree) {
  auto nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes()) {
    if (n.is_leaf()) {
      nodes.push_back({{"e", n.erroneous}, {"c", n.correct}});
    } else {
      nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right},
                       {"e", n.erroneous}, {"c", n.correct}});
    }
  }
  return nodes;
}

DecisionTree tree_from_json(const nlohmann::json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& n : j) {
    TreeNode node;
    node.erroneous = n.at("e").get<double>();
    node.correct = n.at("c").get<double>();
    if (n.contains("f")) {
      node.feature = n.at("f").get<int>();
      node.threshold = n.at("t").get<double>();
      node.left = n.at("l").get<std::size_t>();
      node.right = n.at("r").get<std::size_t>();
    }
    nodes.push_back(node);
  }
  for (const auto& node : nodes) {
    if (!node.is_leaf() && (node.left >= nodes.size() || node.right >= nodes.size())) {
      throw Error(ErrorCode::Decode, "tree node child index out of range");
    }
  }
  return DecisionTree(std::move(nodes));
}

}  // namespace

std::string DecisionTree::to_json() const { return tree_to_json(*this).dump(); }

DecisionTree DecisionTree::from_json(std::string_view text) {
  try {
    return tree_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Decode, std::string("tree JSON: ") + e.what());
  }
}

std::string Committee::to_json() const {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["hyperparams"] = {{"max_depth", hyper_.max_depth}, {"min_leaf", hyper_.min_leaf}};
  j["seed"] = seed_;
  j["n_features"] = n_features_;
  j["constant"] = constant_ ? nlohmann::json(*constant_) : nlohmann::json(nullptr);
  auto trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(tree_to_json(t));
  j["trees"] = std::move(trees);
  return j.dump();
}

Committee Committee::from_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorCode::VersionMismatch, "model format version " + std::to_string(version) + " not supported");
    }
    std::vector<DecisionTree> trees;
    for (const auto& t : j.at("trees")) trees.push_back(tree_from_json(t));
    std::optional<double> constant;
    if (!j.at("constant").is_null()) constant = j.at("constant").get<double>();
    Hyperparams hyper{j.at("hyperparams").at("max_depth").get<std::size_t>(),
                      j.at("hyperparams").at("min_leaf").get<std::size_t>()};
    return from_parts(std::move(trees), hyper, j.at("seed").get<std::uint64_t>(),
                      j.at("n_features").get<std::size_t>(), constant);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Decode, std::string("model JSON: ") + e.what());
  }
}

}  // namespace cellsift
