#include "cellsift/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cellsift/error.hpp"
#include "cellsift/random.hpp"
#include "json.hpp"

namespace cellsift {

namespace {

constexpr int kFormatVersion = 1;

double sigmoid(double x) {
  if (x > 30.0) return 1.0;
  if (x < -30.0) return 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}

// Cumulative unigram^0.75 distribution for negative sampling.
std::vector<double> negative_cdf(const std::vector<std::size_t>& counts) {
  std::vector<double> cdf(counts.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < counts.size(); ++t) {
    acc += std::pow(static_cast<double>(counts[t]), 0.75);
    cdf[t] = acc;
  }
  for (auto& c : cdf) c /= acc;
  return cdf;
}

std::size_t sample_negative(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.uniform();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  return static_cast<std::size_t>(it - cdf.begin());
}

}  // namespace

bool EmbeddingModel::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

std::span<const double> EmbeddingModel::vector(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) throw Error(ErrorCode::UnknownToken, "no embedding for token '" + std::string(token) + "'");
  return {vectors_.data() + it->second * dim_, dim_};
}

EmbeddingModel train_embedding(const Table& table, const EmbeddingParams& params) {
  if (params.dim == 0) throw Error(ErrorCode::Config, "embedding dimension must be >= 1");

  EmbeddingModel model;
  model.dim_ = params.dim;
  model.epochs_ = params.epochs;
  model.seed_ = params.seed;

  const std::size_t n = table.n_rows();
  const std::size_t m = table.n_cols();
  std::vector<std::size_t> doc(n * m);
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      auto token = ValueToken{j, table.at(i, j)}.str();
      auto [it, inserted] = model.index_.try_emplace(token, model.tokens_.size());
      if (inserted) {
        model.tokens_.push_back(token);
        counts.push_back(0);
      }
      ++counts[it->second];
      doc[i * m + j] = it->second;
    }
  }

  const std::size_t vocab = model.tokens_.size();
  const std::size_t d = params.dim;
  Rng rng(derive_seed(params.seed, {0xE3BEDULL}));
  std::vector<double> in(vocab * d);
  std::vector<double> out(vocab * d, 0.0);
  for (auto& v : in) v = (rng.uniform() - 0.5) / static_cast<double>(d);

  const auto cdf = negative_cdf(counts);
  const double total_pairs = static_cast<double>(params.epochs) * static_cast<double>(n) *
                             static_cast<double>(m) * static_cast<double>(m > 0 ? m - 1 : 0);
  double processed = 0.0;
  std::vector<double> grad(d);

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t a = 0; a < m; ++a) {
        const std::size_t center = doc[i * m + a];
        double* v_in = &in[center * d];
        for (std::size_t b = 0; b < m; ++b) {
          if (a == b) continue;
          const double alpha =
              params.learning_rate * std::max(1e-4, 1.0 - processed / std::max(1.0, total_pairs));
          processed += 1.0;
          std::fill(grad.begin(), grad.end(), 0.0);
          const std::size_t context = doc[i * m + b];
          for (std::size_t s = 0; s <= params.negatives; ++s) {
            std::size_t target = context;
            double label = 1.0;
            if (s > 0) {
              target = sample_negative(cdf, rng);
              if (target == context) continue;
              label = 0.0;
            }
            double* v_out = &out[target * d];
            double dot = 0.0;
            for (std::size_t k = 0; k < d; ++k) dot += v_in[k] * v_out[k];
            const double g = (label - sigmoid(dot)) * alpha;
            for (std::size_t k = 0; k < d; ++k) grad[k] += g * v_out[k];
            for (std::size_t k = 0; k < d; ++k) v_out[k] += g * v_in[k];
          }
          for (std::size_t k = 0; k < d; ++k) v_in[k] += grad[k];
        }
      }
    }
  }

  // Input plus context vectors: keeps first-order co-occurrence (a value and
  // the values it appears next to) as well as shared-context similarity.
  model.vectors_.resize(vocab * d);
  for (std::size_t t = 0; t < vocab * d; ++t) model.vectors_[t] = in[t] + out[t];
  return model;
}

std::span<const double> embed(const EmbeddingModel& model, CellRef cell, const Table& table) {
  table.check_bounds(cell);
  return model.vector(ValueToken{cell.col, table.at(cell)});
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size() && k < b.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

std::string EmbeddingModel::to_json() const {
  nlohmann::ordered_json j;
  j["format_version"] = kFormatVersion;
  j["dim"] = dim_;
  j["epochs"] = epochs_;
  j["seed"] = seed_;
  auto& vecs = j["vectors"] = nlohmann::ordered_json::object();
  for (std::size_t t = 0; t < tokens_.size(); ++t) {
    std::vector<double> v(vectors_.begin() + static_cast<std::ptrdiff_t>(t * dim_),
                          vectors_.begin() + static_cast<std::ptrdiff_t>((t + 1) * dim_));
    vecs[tokens_[t]] = v;
  }
  return j.dump();
}

EmbeddingModel EmbeddingModel::from_json(std::string_view text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Decode, std::string("embedding file: ") + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw Error(ErrorCode::VersionMismatch, "embedding format version " + std::to_string(version) +
                                                  " is not supported (expected " +
                                                  std::to_string(kFormatVersion) + ")");
    }
    EmbeddingModel model;
    model.dim_ = j.at("dim").get<std::size_t>();
    model.epochs_ = j.at("epochs").get<std::size_t>();
    model.seed_ = j.at("seed").get<std::uint64_t>();
    for (const auto& [token, values] : j.at("vectors").items()) {
      auto v = values.get<std::vector<double>>();
      if (v.size() != model.dim_) throw Error(ErrorCode::Decode, "vector for '" + token + "' has wrong length");
      model.index_.emplace(token, model.tokens_.size());
      model.tokens_.push_back(token);
      model.vectors_.insert(model.vectors_.end(), v.begin(), v.end());
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Decode, std::string("embedding file: ") + e.what());
  }
}

void EmbeddingModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << to_json();
}

EmbeddingModel EmbeddingModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace cellsift
