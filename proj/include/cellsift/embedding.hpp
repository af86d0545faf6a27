#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cellsift/table.hpp"

namespace cellsift {

/// A cell value scoped to its column: "{col}={value}".
struct ValueToken {
  std::size_t col = 0;
  std::string value;

  std::string str() const { return std::to_string(col) + "=" + value; }
  friend bool operator==(const ValueToken&, const ValueToken&) = default;
};

struct EmbeddingParams {
  std::size_t dim = 50;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;
};

/// Skip-gram vectors for every (column, value) token of a table. Each tuple is
/// one document and every ordered token pair inside it is a training pair.
class EmbeddingModel {
 public:
  EmbeddingModel() = default;

  std::size_t dim() const noexcept { return dim_; }
  std::size_t epochs() const noexcept { return epochs_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  bool contains(std::string_view token) const;
  /// Throws UnknownToken.
  std::span<const double> vector(std::string_view token) const;
  std::span<const double> vector(const ValueToken& token) const { return vector(token.str()); }

  std::string to_json() const;
  static EmbeddingModel from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static EmbeddingModel load(const std::filesystem::path& path);

  friend bool operator==(const EmbeddingModel& a, const EmbeddingModel& b) {
    return a.dim_ == b.dim_ && a.epochs_ == b.epochs_ && a.seed_ == b.seed_ && a.tokens_ == b.tokens_ &&
           a.vectors_ == b.vectors_;
  }

 private:
  friend EmbeddingModel train_embedding(const Table& table, const EmbeddingParams& params);

  std::size_t dim_ = 0;
  std::size_t epochs_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> vectors_;  // tokens_.size() x dim_
};

/// Deterministic for a fixed seed; single-threaded.
EmbeddingModel train_embedding(const Table& table, const EmbeddingParams& params);

/// Vector of the token at `cell`; throws UnknownToken on model/table mismatch.
std::span<const double> embed(const EmbeddingModel& model, CellRef cell, const Table& table);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace cellsift
