#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cellsift/embedding.hpp"
#include "cellsift/matrix.hpp"
#include "cellsift/table.hpp"

namespace cellsift {

enum class TokenKind { CharNGram, Word };

/// Character n-grams of a UTF-8 string, with repetition, in order of
/// appearance. Code points are the unit; strings shorter than n yield none.
std::vector<std::string> char_ngrams(std::string_view cell, std::size_t n);

/// Maximal runs of alphanumeric (or non-ASCII) characters.
std::vector<std::string> word_tokens(std::string_view cell);

std::size_t utf8_length(std::string_view s);

struct NGramVocabulary {
  std::size_t column = 0;
  std::size_t n = 1;
  TokenKind kind = TokenKind::CharNGram;
  std::vector<std::string> grams;  // lexicographically sorted, distinct
  std::vector<std::size_t> df;     // cells of the column containing the gram
  bool truncated = false;          // the size cap dropped rare grams

  std::optional<std::size_t> index_of(std::string_view gram) const;
  std::size_t size() const noexcept { return grams.size(); }
};

constexpr std::size_t kDefaultVocabularyCap = 2000;

NGramVocabulary build_ngram_vocab(const Table& table, std::size_t col, std::size_t n,
                                  std::size_t cap = kDefaultVocabularyCap);
NGramVocabulary build_word_vocab(const Table& table, std::size_t col,
                                 std::size_t cap = kDefaultVocabularyCap);

/// tf = raw count, idf = ln((1+N)/(1+df)) + 1, then L2-normalized.
std::vector<double> tfidf_vector(std::string_view cell, const NGramVocabulary& vocab, std::size_t n_rows);

enum class DataType { Empty = 0, Integer, Float, Date, Text };
const char* to_string(DataType t) noexcept;
/// First match wins: empty, integer, float, ISO calendar date, text.
DataType detect_type(std::string_view cell);

/// Value occurrence counts of one column.
class ColumnStats {
 public:
  ColumnStats() = default;
  ColumnStats(const Table& table, std::size_t col);
  explicit ColumnStats(std::span<const std::string_view> values);
  std::size_t occurrences(std::string_view value) const;

 private:
  std::unordered_map<std::string, std::size_t> counts_;
};

constexpr std::size_t kMetadataLength = 9;
/// [occurrence, string_length, type one-hot x5, parsed_number, is_numeric]
std::array<double, kMetadataLength> metadata_vector(std::string_view cell, const ColumnStats& stats);
const std::array<const char*, kMetadataLength>& metadata_feature_names();

/// Concatenates one vector per column. When `expected` is non-empty each part
/// must have the recorded length, otherwise LengthDrift is thrown.
std::vector<double> concat_columns(std::span<const std::vector<double>> parts,
                                   std::span<const std::size_t> expected = {});

/// Latest estimated error probability of every cell, column-major.
class ErrorProbabilityBlock {
 public:
  static constexpr double kDefault = 0.0;

  ErrorProbabilityBlock() = default;
  ErrorProbabilityBlock(std::size_t n_rows, std::size_t n_cols);

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return initialized_.size(); }
  double at(std::size_t row, std::size_t col) const { return probs_[col * n_rows_ + row]; }
  std::span<const double> column(std::size_t col) const { return {probs_.data() + col * n_rows_, n_rows_}; }
  bool initialized(std::size_t col) const { return initialized_.at(col) != 0; }

  /// Replaces a whole column; throws BadProbability (block untouched) if any
  /// value is outside [0,1] or the length is not n_rows.
  void refresh(std::size_t col, std::span<const double> probabilities);

  friend bool operator==(const ErrorProbabilityBlock&, const ErrorProbabilityBlock&) = default;

 private:
  std::size_t n_rows_ = 0;
  std::vector<double> probs_;
  std::vector<char> initialized_;
};

/// P(erroneous) of the other columns of the target's row, ascending, skipping target.col.
std::vector<double> error_correlation_vector(const ErrorProbabilityBlock& block, CellRef target);

struct FeatureConfig {
  std::size_t ngram_order = 1;
  bool use_ngrams = true;
  bool use_words = false;  // ablation only
  bool use_metadata = true;
  bool use_embedding = true;
  std::size_t embedding_dim = 50;
  bool use_error_correlation = true;
  std::size_t vocabulary_cap = kDefaultVocabularyCap;

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

struct FeatureBlock {
  std::string name;  // "text", "metadata", "embedding", "error_correlation"
  std::size_t offset = 0;
  std::size_t length = 0;
};

struct CellFeatureVector {
  std::vector<FeatureBlock> blocks;
  std::vector<double> values;
};

/// Index <-> human readable feature name.
class FeatureRegistry {
 public:
  void add(std::string name);
  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::size_t index) const { return names_.at(index); }
  std::optional<std::size_t> index(std::string_view name) const;
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::string to_json() const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Per-cell feature vectors: the column-wise concatenated single-column blocks
/// are shared by every column of a row; the error-correlation block is read
/// from an ErrorProbabilityBlock each time features are materialized.
class FeatureMatrix {
 public:
  std::size_t n_rows() const noexcept { return shared_.rows(); }
  std::size_t n_cols() const noexcept { return n_cols_; }
  std::size_t shared_length() const noexcept { return shared_.cols(); }
  /// Feature length seen by every column's classifier.
  std::size_t feature_length() const noexcept {
    return shared_.cols() + (use_error_correlation_ ? n_cols_ - 1 : 0);
  }
  bool uses_error_correlation() const noexcept { return use_error_correlation_; }
  const std::vector<FeatureBlock>& shared_blocks() const noexcept { return blocks_; }
  const std::vector<NGramVocabulary>& vocabularies() const noexcept { return vocabs_; }

  CellFeatureVector cell_vector(CellRef cell, const ErrorProbabilityBlock& block) const;
  /// Feature rows of column `col` for the given table rows.
  Matrix column_matrix(std::size_t col, std::span<const std::size_t> rows, const ErrorProbabilityBlock& block) const;
  /// All N rows of column `col`.
  Matrix column_matrix(std::size_t col, const ErrorProbabilityBlock& block) const;

  /// Names for the feature vectors of column `col`.
  FeatureRegistry registry(std::size_t col) const;

 private:
  friend FeatureMatrix assemble(const Table&, const FeatureConfig&, const EmbeddingModel*);

  Matrix shared_;
  std::vector<FeatureBlock> blocks_;
  std::vector<std::string> shared_names_;
  std::vector<std::string> column_names_;
  std::vector<NGramVocabulary> vocabs_;
  std::size_t n_cols_ = 0;
  bool use_error_correlation_ = true;
};

/// Builds vocabularies and column statistics from `table` and lays every cell
/// out as [text concat, metadata concat, embedding concat, error correlation].
/// `embedding` may be null when the embedding block is disabled.
FeatureMatrix assemble(const Table& table, const FeatureConfig& config, const EmbeddingModel* embedding);

}  // namespace cellsift
