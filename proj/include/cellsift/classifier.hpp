#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cellsift/featurizer.hpp"
#include "cellsift/matrix.hpp"
#include "cellsift/random.hpp"

namespace cellsift {

struct Hyperparams {
  std::size_t max_depth = 8;
  std::size_t min_leaf = 1;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// max_depth in {4, 8, 16} x min_leaf in {1, 5}.
std::vector<Hyperparams> default_grid();

constexpr std::size_t kDefaultCommitteeSize = 25;
constexpr double kSingleClassErroneous = 0.99;
constexpr double kSingleClassCorrect = 0.01;

/// Split nodes have feature >= 0; leaves carry (class-weighted) counts.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  double erroneous = 0.0;
  double correct = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  /// Laplace-smoothed erroneous fraction (e+1)/(e+c+2).
  double probability() const noexcept { return (erroneous + 1.0) / (erroneous + correct + 2.0); }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const TreeNode& root() const { return nodes_.front(); }
  /// x <= threshold goes left.
  const TreeNode& leaf(std::span<const double> x) const;
  /// Node indices from root to leaf.
  std::vector<std::size_t> path(std::span<const double> x) const;
  double probability(std::span<const double> x) const { return leaf(x).probability(); }
  std::size_t depth() const;

  std::string to_json() const;
  /// Throws Decode.
  static DecisionTree from_json(std::string_view text);

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

struct TreeParams {
  Hyperparams hyper;
  /// Non-constant features evaluated per split; 0 means all.
  std::size_t max_features = 0;
};

/// Grows one tree on `samples` (row indices into X, repeats allowed) by
/// weighted Gini gain. `labels[i]` is 1 for erroneous; `class_weight` is
/// {correct, erroneous}. Ties keep the lowest feature index, then the lowest threshold.
DecisionTree fit_tree(const Matrix& X, std::span<const int> labels, std::span<const std::size_t> samples,
                      const std::array<double, 2>& class_weight, const TreeParams& params, Rng& rng);

/// Inverse class frequency, normalized so that the weights sum to n.
std::array<double, 2> balanced_class_weights(std::span<const int> labels);

/// Bagged committee of decision trees: the per-column error classifier.
class Committee {
 public:
  Committee() = default;

  /// Bootstrap + sqrt(F) feature subsampling per split. A single-class label
  /// set yields a constant predictor (0.99 or 0.01).
  static Committee train(const Matrix& X, std::span<const int> labels, const Hyperparams& hyper, std::uint64_t seed,
                         std::size_t n_trees = kDefaultCommitteeSize);
  static Committee constant(double p_erroneous, std::size_t n_features);
  static Committee from_parts(std::vector<DecisionTree> trees, Hyperparams hyper, std::uint64_t seed,
                              std::size_t n_features, std::optional<double> constant);

  bool is_constant() const noexcept { return constant_.has_value(); }
  std::optional<double> constant_probability() const noexcept { return constant_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  const Hyperparams& hyperparams() const noexcept { return hyper_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t n_features() const noexcept { return n_features_; }

  /// Mean over trees of the smoothed leaf erroneous fraction.
  std::vector<double> predict_proba(const Matrix& X) const;
  /// Vote entropy (bits) of the trees' erroneous votes.
  std::vector<double> disagreement(const Matrix& X) const;

  std::string to_json() const;
  static Committee from_json(std::string_view text);

  friend bool operator==(const Committee&, const Committee&) = default;

 private:
  void check_width(const Matrix& X) const;

  std::vector<DecisionTree> trees_;
  Hyperparams hyper_;
  std::uint64_t seed_ = 0;
  std::size_t n_features_ = 0;
  std::optional<double> constant_;
};

/// max(p, 1-p) per entry.
std::vector<double> certainty(std::span<const double> probabilities);
/// -v log2 v - (1-v) log2 (1-v), with 0 log 0 = 0.
double vote_entropy(double v);

/// F1 on the erroneous class; 2TP / (2TP + FP + FN), 1 when the denominator is 0.
double f1_erroneous(std::span<const int> truth, std::span<const int> predicted);

struct CvReport {
  std::size_t folds = 0;
  std::vector<double> fold_f1;
  double mean_f1 = 0.0;
  /// Fewer than two examples of some class: nothing was validated.
  bool single_class = false;

  friend bool operator==(const CvReport&, const CvReport&) = default;
};

/// Stratified k-fold with k = min(requested, minority class count).
CvReport cross_validate(const Matrix& X, std::span<const int> labels, const Hyperparams& hyper, std::size_t folds,
                        std::uint64_t seed, std::size_t n_trees = kDefaultCommitteeSize);

struct GridSearchResult {
  Hyperparams best;
  CvReport report;
};

/// Argmax mean F1; ties prefer smaller max_depth, then larger min_leaf. Every
/// grid point sees the same folds.
GridSearchResult grid_search(const Matrix& X, std::span<const int> labels, std::span<const Hyperparams> grid,
                             std::size_t folds, std::uint64_t seed, std::size_t n_trees = kDefaultCommitteeSize);

constexpr std::size_t kSurrogateDepth = 4;

/// Single unbagged tree over all features, for decision-path explanations.
DecisionTree train_surrogate(const Matrix& X, std::span<const int> labels, std::size_t max_depth = kSurrogateDepth);

struct ExplanationStep {
  std::string feature;
  std::string comparison;  // "<=" or ">"
  double threshold = 0.0;
  double value = 0.0;
};

struct Explanation {
  std::vector<ExplanationStep> path;
  double erroneous_fraction = 0.0;
  double correct_fraction = 0.0;
  bool erroneous = false;

  /// "IF <feature> > 0.8 AND ... THEN <subject> is erroneous"
  std::string render(const std::string& subject) const;
};

/// Throws NotTrained on an empty tree.
Explanation explain(const DecisionTree& surrogate, std::span<const double> features, const FeatureRegistry& registry);

}  // namespace cellsift
