#include "cellsift/featurizer.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>

#include "cellsift/error.hpp"
#include "json.hpp"

namespace cellsift {

namespace {

std::size_t utf8_unit_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

std::vector<std::string_view> code_points(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t len = std::min(utf8_unit_length(static_cast<unsigned char>(s[i])), s.size() - i);
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), is_digit);
}

bool is_integer(std::string_view s) {
  if (!s.empty() && (s[0] == '+' || s[0] == '-')) s.remove_prefix(1);
  return all_digits(s);
}

bool is_float(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t digits = 0;
  while (i < s.size() && is_digit(s[i])) ++i, ++digits;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && is_digit(s[i])) ++i, ++digits;
  }
  if (digits == 0) return false;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    std::size_t exp_digits = 0;
    while (i < s.size() && is_digit(s[i])) ++i, ++exp_digits;
    if (exp_digits == 0) return false;
  }
  return i == s.size();
}

bool is_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  if (!all_digits(s.substr(0, 4)) || !all_digits(s.substr(5, 2)) || !all_digits(s.substr(8, 2))) return false;
  const int year = std::stoi(std::string(s.substr(0, 4)));
  const int month = std::stoi(std::string(s.substr(5, 2)));
  const int day = std::stoi(std::string(s.substr(8, 2)));
  if (month < 1 || month > 12 || day < 1) return false;
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  const int limit = kDays[month - 1] + (month == 2 && leap ? 1 : 0);
  return day <= limit;
}

double parse_number(std::string_view s) {
  if (!s.empty() && s[0] == '+') s.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{}) {
    // out-of-range magnitudes saturate
    const bool negative = !s.empty() && s[0] == '-';
    return negative ? -HUGE_VAL : HUGE_VAL;
  }
  return value;
}

NGramVocabulary finish_vocab(std::size_t col, std::size_t n, TokenKind kind,
                             std::map<std::string, std::size_t> df, std::size_t cap) {
  NGramVocabulary vocab;
  vocab.column = col;
  vocab.n = n;
  vocab.kind = kind;
  std::vector<std::pair<std::string, std::size_t>> entries(std::make_move_iterator(df.begin()),
                                                           std::make_move_iterator(df.end()));
  if (entries.size() > cap) {
    vocab.truncated = true;
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    entries.resize(cap);
    std::sort(entries.begin(), entries.end());
  }
  for (auto& [gram, count] : entries) {
    vocab.grams.push_back(std::move(gram));
    vocab.df.push_back(count);
  }
  return vocab;
}

template <typename Tokenize>
NGramVocabulary build_vocab(const Table& table, std::size_t col, std::size_t n, TokenKind kind,
                            std::size_t cap, Tokenize&& tokenize) {
  std::map<std::string, std::size_t> df;
  for (std::size_t i = 0; i < table.n_rows(); ++i) {
    auto grams = tokenize(table.at(i, col));
    std::sort(grams.begin(), grams.end());
    grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
    for (auto& g : grams) ++df[std::move(g)];
  }
  return finish_vocab(col, n, kind, std::move(df), cap);
}

}  // namespace

std::size_t utf8_length(std::string_view s) { return code_points(s).size(); }

std::vector<std::string> char_ngrams(std::string_view cell, std::size_t n) {
  std::vector<std::string> out;
  if (n == 0) return out;
  auto cps = code_points(cell);
  if (cps.size() < n) return out;
  for (std::size_t start = 0; start + n <= cps.size(); ++start) {
    std::string gram;
    for (std::size_t k = 0; k < n; ++k) gram.append(cps[start + k]);
    out.push_back(std::move(gram));
  }
  return out;
}

std::vector<std::string> word_tokens(std::string_view cell) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : cell) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      current.push_back(ch);
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::optional<std::size_t> NGramVocabulary::index_of(std::string_view gram) const {
  auto it = std::lower_bound(grams.begin(), grams.end(), gram,
                             [](const std::string& a, std::string_view b) { return std::string_view(a) < b; });
  if (it == grams.end() || *it != gram) return std::nullopt;
  return static_cast<std::size_t>(it - grams.begin());
}

NGramVocabulary build_ngram_vocab(const Table& table, std::size_t col, std::size_t n, std::size_t cap) {
  if (n == 0) throw Error(ErrorCode::Config, "n-gram order must be >= 1");
  table.check_bounds({0, col});
  return build_vocab(table, col, n, TokenKind::CharNGram, cap,
                     [n](std::string_view cell) { return char_ngrams(cell, n); });
}

NGramVocabulary build_word_vocab(const Table& table, std::size_t col, std::size_t cap) {
  table.check_bounds({0, col});
  return build_vocab(table, col, 1, TokenKind::Word, cap,
                     [](std::string_view cell) { return word_tokens(cell); });
}

std::vector<double> tfidf_vector(std::string_view cell, const NGramVocabulary& vocab, std::size_t n_rows) {
  std::vector<double> out(vocab.size(), 0.0);
  auto tokens = vocab.kind == TokenKind::Word ? word_tokens(cell) : char_ngrams(cell, vocab.n);
  for (const auto& g : tokens) {
    if (auto idx = vocab.index_of(g)) out[*idx] += 1.0;
  }
  const double n1 = 1.0 + static_cast<double>(n_rows);
  double norm = 0.0;
  for (std::size_t g = 0; g < out.size(); ++g) {
    if (out[g] == 0.0) continue;
    out[g] *= std::log(n1 / (1.0 + static_cast<double>(vocab.df[g]))) + 1.0;
    norm += out[g] * out[g];
  }
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (auto& v : out) v /= norm;
  }
  return out;
}

const char* to_string(DataType t) noexcept {
  switch (t) {
    case DataType::Empty: return "empty";
    case DataType::Integer: return "integer";
    case DataType::Float: return "float";
    case DataType::Date: return "date";
    case DataType::Text: return "text";
  }
  return "text";
}

DataType detect_type(std::string_view cell) {
  if (cell.empty()) return DataType::Empty;
  if (is_integer(cell)) return DataType::Integer;
  if (is_float(cell)) return DataType::Float;
  if (is_iso_date(cell)) return DataType::Date;
  return DataType::Text;
}

ColumnStats::ColumnStats(const Table& table, std::size_t col) {
  for (std::size_t i = 0; i < table.n_rows(); ++i) ++counts_[table.at(i, col)];
}

ColumnStats::ColumnStats(std::span<const std::string_view> values) {
  for (auto v : values) ++counts_[std::string(v)];
}

std::size_t ColumnStats::occurrences(std::string_view value) const {
  auto it = counts_.find(std::string(value));
  return it == counts_.end() ? 0 : it->second;
}

std::array<double, kMetadataLength> metadata_vector(std::string_view cell, const ColumnStats& stats) {
  std::array<double, kMetadataLength> out{};
  out[0] = static_cast<double>(stats.occurrences(cell));
  out[1] = static_cast<double>(utf8_length(cell));
  const DataType type = detect_type(cell);
  out[2 + static_cast<std::size_t>(type)] = 1.0;
  if (type == DataType::Integer || type == DataType::Float) {
    out[7] = parse_number(cell);
    out[8] = 1.0;
  }
  return out;
}

const std::array<const char*, kMetadataLength>& metadata_feature_names() {
  static const std::array<const char*, kMetadataLength> names = {
      "occurrence", "string_length", "type_empty", "type_integer", "type_float",
      "type_date",  "type_text",     "number",     "is_numeric"};
  return names;
}

std::vector<double> concat_columns(std::span<const std::vector<double>> parts, std::span<const std::size_t> expected) {
  if (!expected.empty() && expected.size() != parts.size()) {
    throw Error(ErrorCode::LengthDrift, "expected " + std::to_string(expected.size()) + " column vectors, got " +
                                            std::to_string(parts.size()));
  }
  std::size_t total = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (!expected.empty() && parts[k].size() != expected[k]) {
      throw Error(ErrorCode::LengthDrift, "column " + std::to_string(k) + " vector has length " +
                                              std::to_string(parts[k].size()) + ", layout expects " +
                                              std::to_string(expected[k]));
    }
    total += parts[k].size();
  }
  std::vector<double> out;
  out.reserve(total);
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

ErrorProbabilityBlock::ErrorProbabilityBlock(std::size_t n_rows, std::size_t n_cols)
    : n_rows_(n_rows), probs_(n_rows * n_cols, kDefault), initialized_(n_cols, 0) {}

void ErrorProbabilityBlock::refresh(std::size_t col, std::span<const double> probabilities) {
  if (col >= n_cols()) throw Error(ErrorCode::OutOfBounds, "column " + std::to_string(col) + " out of bounds");
  if (probabilities.size() != n_rows_) {
    throw Error(ErrorCode::BadProbability, "expected " + std::to_string(n_rows_) + " probabilities, got " +
                                               std::to_string(probabilities.size()));
  }
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = probabilities[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::BadProbability, "probability " + std::to_string(p) + " at row " + std::to_string(i) +
                                                 " is outside [0,1]");
    }
  }
  std::copy(probabilities.begin(), probabilities.end(), probs_.begin() + static_cast<std::ptrdiff_t>(col * n_rows_));
  initialized_[col] = 1;
}

std::vector<double> error_correlation_vector(const ErrorProbabilityBlock& block, CellRef target) {
  std::vector<double> out;
  if (block.n_cols() == 0) return out;
  out.reserve(block.n_cols() - 1);
  for (std::size_t k = 0; k < block.n_cols(); ++k) {
    if (k != target.col) out.push_back(block.at(target.row, k));
  }
  return out;
}

void FeatureRegistry::add(std::string name) {
  auto [it, inserted] = index_.try_emplace(name, names_.size());
  if (!inserted) throw Error(ErrorCode::Internal, "duplicate feature name '" + name + "'");
  names_.push_back(std::move(name));
}

std::optional<std::size_t> FeatureRegistry::index(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string FeatureRegistry::to_json() const { return nlohmann::json(names_).dump(); }

namespace {

// Column names as used in feature names; duplicates get a "#j" suffix.
std::vector<std::string> display_names(const Table& table) {
  std::map<std::string, std::size_t> seen;
  for (const auto& n : table.schema()) ++seen[n];
  std::vector<std::string> out;
  for (std::size_t j = 0; j < table.n_cols(); ++j) {
    const auto& n = table.column_name(j);
    out.push_back(seen[n] > 1 ? n + "#" + std::to_string(j) : n);
  }
  return out;
}

std::string gram_feature_name(const NGramVocabulary& vocab, std::size_t g) {
  if (vocab.kind == TokenKind::Word) return "word=" + vocab.grams[g];
  if (vocab.n == 1) return "unigram=" + vocab.grams[g];
  return "ngram" + std::to_string(vocab.n) + "=" + vocab.grams[g];
}

}  // namespace

FeatureMatrix assemble(const Table& table, const FeatureConfig& config, const EmbeddingModel* embedding) {
  const std::size_t n = table.n_rows();
  const std::size_t m = table.n_cols();
  if (config.use_embedding && embedding == nullptr) {
    throw Error(ErrorCode::Config, "embedding block enabled but no embedding model supplied");
  }

  FeatureMatrix fm;
  fm.n_cols_ = m;
  fm.use_error_correlation_ = config.use_error_correlation;
  fm.column_names_ = display_names(table);

  // Per-column text vocabularies: n-grams then (ablation) words.
  std::vector<std::vector<const NGramVocabulary*>> text_vocabs(m);
  if (config.use_ngrams || config.use_words) {
    for (std::size_t j = 0; j < m; ++j) {
      if (config.use_ngrams) fm.vocabs_.push_back(build_ngram_vocab(table, j, config.ngram_order, config.vocabulary_cap));
      if (config.use_words) fm.vocabs_.push_back(build_word_vocab(table, j, config.vocabulary_cap));
    }
    for (const auto& v : fm.vocabs_) text_vocabs[v.column].push_back(&v);
  }

  std::vector<std::size_t> text_len(m, 0);
  std::size_t text_total = 0;
  for (std::size_t j = 0; j < m; ++j) {
    for (auto* v : text_vocabs[j]) text_len[j] += v->size();
    text_total += text_len[j];
  }
  const std::size_t meta_total = config.use_metadata ? kMetadataLength * m : 0;
  const std::size_t emb_dim = config.use_embedding ? embedding->dim() : 0;
  const std::size_t emb_total = emb_dim * m;

  std::size_t offset = 0;
  auto push_block = [&](const char* name, std::size_t len) {
    if (len > 0) fm.blocks_.push_back({name, offset, len});
    offset += len;
  };
  push_block("text", text_total);
  push_block("metadata", meta_total);
  push_block("embedding", emb_total);

  for (std::size_t j = 0; j < m; ++j) {
    for (auto* v : text_vocabs[j]) {
      for (std::size_t g = 0; g < v->size(); ++g) {
        fm.shared_names_.push_back("col=" + fm.column_names_[j] + "|" + gram_feature_name(*v, g));
      }
    }
  }
  if (config.use_metadata) {
    for (std::size_t j = 0; j < m; ++j) {
      for (const char* meta : metadata_feature_names()) {
        fm.shared_names_.push_back("col=" + fm.column_names_[j] + "|meta=" + meta);
      }
    }
  }
  for (std::size_t j = 0; j < m && emb_dim > 0; ++j) {
    for (std::size_t k = 0; k < emb_dim; ++k) {
      fm.shared_names_.push_back("col=" + fm.column_names_[j] + "|w2v=" + std::to_string(k));
    }
  }

  std::vector<ColumnStats> stats;
  if (config.use_metadata) {
    for (std::size_t j = 0; j < m; ++j) stats.emplace_back(table, j);
  }

  fm.shared_ = Matrix(n, offset);
  std::vector<std::vector<double>> text_parts(m), meta_parts(m), emb_parts(m);
  std::vector<std::size_t> meta_len(m, kMetadataLength), emb_len(m, emb_dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const std::string& cell = table.at(i, j);
      text_parts[j].clear();
      for (auto* v : text_vocabs[j]) {
        auto t = tfidf_vector(cell, *v, n);
        text_parts[j].insert(text_parts[j].end(), t.begin(), t.end());
      }
      if (config.use_metadata) {
        auto meta = metadata_vector(cell, stats[j]);
        meta_parts[j].assign(meta.begin(), meta.end());
      }
      if (emb_dim > 0) {
        auto e = embed(*embedding, {i, j}, table);
        emb_parts[j].assign(e.begin(), e.end());
      }
    }
    auto row = fm.shared_.row(i);
    auto out = row.begin();
    auto text = concat_columns(text_parts, text_len);
    out = std::copy(text.begin(), text.end(), out);
    if (config.use_metadata) {
      auto meta = concat_columns(meta_parts, meta_len);
      out = std::copy(meta.begin(), meta.end(), out);
    }
    if (emb_dim > 0) {
      auto emb = concat_columns(emb_parts, emb_len);
      std::copy(emb.begin(), emb.end(), out);
    }
  }
  return fm;
}

CellFeatureVector FeatureMatrix::cell_vector(CellRef cell, const ErrorProbabilityBlock& block) const {
  CellFeatureVector out;
  out.blocks = blocks_;
  auto shared = shared_.row(cell.row);
  out.values.assign(shared.begin(), shared.end());
  if (use_error_correlation_) {
    auto ec = error_correlation_vector(block, cell);
    out.blocks.push_back({"error_correlation", shared_.cols(), ec.size()});
    out.values.insert(out.values.end(), ec.begin(), ec.end());
  }
  return out;
}

Matrix FeatureMatrix::column_matrix(std::size_t col, std::span<const std::size_t> rows,
                                    const ErrorProbabilityBlock& block) const {
  if (use_error_correlation_ && (block.n_cols() != n_cols_ || block.n_rows() != n_rows())) {
    throw Error(ErrorCode::FeatureLengthMismatch, "error-probability block shape does not match the table");
  }
  const std::size_t shared = shared_.cols();
  Matrix out(rows.size(), feature_length());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto dst = out.row(r);
    auto src = shared_.row(rows[r]);
    std::copy(src.begin(), src.end(), dst.begin());
    if (!use_error_correlation_) continue;
    std::size_t pos = shared;
    for (std::size_t k = 0; k < n_cols_; ++k) {
      if (k != col) dst[pos++] = block.at(rows[r], k);
    }
  }
  return out;
}

Matrix FeatureMatrix::column_matrix(std::size_t col, const ErrorProbabilityBlock& block) const {
  std::vector<std::size_t> rows(n_rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return column_matrix(col, rows, block);
}

FeatureRegistry FeatureMatrix::registry(std::size_t col) const {
  FeatureRegistry reg;
  for (const auto& name : shared_names_) reg.add(name);
  if (use_error_correlation_) {
    for (std::size_t k = 0; k < n_cols_; ++k) {
      if (k != col) reg.add("errprob|col=" + column_names_[k]);
    }
  }
  return reg;
}

}  // namespace cellsift
