#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <unistd.h>

#include "cellsift/embedding.hpp"
#include "cellsift/error.hpp"
#include "oracles.hpp"
#include "cellsift/featurizer.hpp"
#include "support.hpp"

using namespace cellsift;
using testing::column_table;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

}  // namespace

TEST_CASE("char n-grams") {
  CHECK(char_ngrams("abc", 1) == std::vector<std::string>{"a", "b", "c"});
  CHECK(char_ngrams("abc", 2) == std::vector<std::string>{"ab", "bc"});
  CHECK(char_ngrams("a", 2).empty());
  CHECK(char_ngrams("", 1).empty());
  // code points, not bytes
  CHECK(char_ngrams("é$", 1) == std::vector<std::string>{"é", "$"});
  CHECK(utf8_length("1200$") == 5);
  CHECK(utf8_length("héllo") == 5);
}

TEST_CASE("word tokens") {
  CHECK(word_tokens("New York, NY") == std::vector<std::string>{"New", "York", "NY"});
  CHECK(word_tokens("$1200").size() == 1);
  CHECK(word_tokens("").empty());
}

TEST_CASE("vocabulary examples") {
  auto v = build_ngram_vocab(column_table({"ab", "ab", "b"}), 0, 1);
  CHECK(v.grams == std::vector<std::string>{"a", "b"});
  CHECK(v.df == std::vector<std::size_t>{2, 3});
  v = build_ngram_vocab(column_table({"ab"}), 0, 2);
  CHECK(v.grams == std::vector<std::string>{"ab"});
  CHECK(v.df == std::vector<std::size_t>{1});
  CHECK(build_ngram_vocab(column_table({"a"}), 0, 2).size() == 0);
}

TEST_CASE("vocabulary cap keeps the most frequent grams") {
  auto v = build_ngram_vocab(column_table({"abc", "ab", "a"}), 0, 1, 2);
  CHECK(v.truncated);
  CHECK(v.grams == std::vector<std::string>{"a", "b"});
}

TEST_CASE("tf-idf worked examples") {
  const auto t = column_table({"ab", "ab", "b"});
  const auto v = build_ngram_vocab(t, 0, 1);
  const auto ab = tfidf_vector("ab", v, 3);
  REQUIRE(ab.size() == 2);
  const double r0 = std::log(4.0 / 3.0) + 1.0, r1 = 1.0;
  CHECK(ab[0] == doctest::Approx(r0 / std::hypot(r0, r1)).epsilon(1e-12));
  CHECK(ab[1] == doctest::Approx(r1 / std::hypot(r0, r1)).epsilon(1e-12));
  // the commonly quoted rounded values, good to about 3 decimals
  CHECK(ab[0] == doctest::Approx(0.78969).epsilon(5e-4));
  CHECK(ab[1] == doctest::Approx(0.61350).epsilon(5e-4));
  CHECK(tfidf_vector("", v, 3) == std::vector<double>{0.0, 0.0});
  const auto bb = tfidf_vector("bb", v, 3);
  CHECK(bb[0] == 0.0);
  CHECK(bb[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("tf-idf matches the brute-force oracle on 200 random columns") {
  const auto r = oracles::tfidf_suite(11);
  INFO(r.first_failure);
  CHECK(r.instances == 200);
  CHECK(r.failures == 0);
}

TEST_CASE("type detection order") {
  CHECK(detect_type("") == DataType::Empty);
  CHECK(detect_type("42") == DataType::Integer);
  CHECK(detect_type("-7") == DataType::Integer);
  CHECK(detect_type("-3.5") == DataType::Float);
  CHECK(detect_type("2020-02-29") == DataType::Date);
  CHECK(detect_type("2021-02-29") == DataType::Text);
  CHECK(detect_type("1200$") == DataType::Text);
  CHECK(detect_type("NY") == DataType::Text);
}

TEST_CASE("metadata vector") {
  const std::vector<std::string_view> salary{"1200$", "900$", "5000"};
  const ColumnStats stats(salary);
  const auto m = metadata_vector("1200$", stats);
  CHECK(m[0] == 1.0);
  CHECK(m[1] == 5.0);
  CHECK(m[2 + static_cast<int>(DataType::Text)] == 1.0);
  CHECK(m[2] + m[3] + m[4] + m[5] + m[6] == 1.0);
  CHECK(m[7] == 0.0);
  CHECK(m[8] == 0.0);

  const std::vector<std::string_view> xs{"x", "x", "y"};
  CHECK(metadata_vector("x", ColumnStats(xs))[0] == 2.0);

  const auto f = metadata_vector("-3.5", ColumnStats(salary));
  CHECK(f[2 + static_cast<int>(DataType::Float)] == 1.0);
  CHECK(f[7] == -3.5);
  CHECK(f[8] == 1.0);
  CHECK(metadata_feature_names().size() == kMetadataLength);
}

TEST_CASE("column concatenation") {
  std::vector<std::vector<double>> parts{{1, 2}, {3}};
  CHECK(concat_columns(parts) == std::vector<double>{1, 2, 3});
  std::vector<std::vector<double>> one{{4, 5}};
  CHECK(concat_columns(one) == std::vector<double>{4, 5});
  std::vector<std::vector<double>> gap{{1, 2}, {}, {3}};
  const std::vector<std::size_t> lens{2, 0, 1};
  CHECK(concat_columns(gap, lens).size() == 3);
  const std::vector<std::size_t> wrong{2, 1, 1};
  CHECK(code_of([&] { concat_columns(gap, wrong); }) == ErrorCode::LengthDrift);
}

TEST_CASE("error correlation vector") {
  ErrorProbabilityBlock block(2, 3);
  const std::vector<double> c0{0.1, 0.0}, c1{0.9, 0.0}, c2{0.4, 0.0};
  block.refresh(0, c0);
  block.refresh(1, c1);
  block.refresh(2, c2);
  CHECK(error_correlation_vector(block, {0, 1}) == std::vector<double>{0.1, 0.4});

  ErrorProbabilityBlock two(1, 2);
  const std::vector<double> p{0.7};
  two.refresh(1, p);
  CHECK(error_correlation_vector(two, {0, 0}) == std::vector<double>{0.7});

  ErrorProbabilityBlock fresh(1, 3);
  CHECK(error_correlation_vector(fresh, {0, 0}) == std::vector<double>{0.0, 0.0});
  CHECK_FALSE(fresh.initialized(1));
}

TEST_CASE("error probability refresh") {
  ErrorProbabilityBlock block(3, 3);
  const std::vector<double> half(3, 0.5);
  block.refresh(2, half);
  CHECK(block.initialized(2));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(error_correlation_vector(block, {i, 0})[1] == 0.5);
    CHECK(error_correlation_vector(block, {i, 1})[1] == 0.5);
  }
  const auto before = block;
  block.refresh(2, half);
  CHECK(block == before);

  const std::vector<double> bad{0.1, 1.2, 0.3};
  CHECK(code_of([&] { block.refresh(0, bad); }) == ErrorCode::BadProbability);
  CHECK(block == before);
  const std::vector<double> nan{0.1, std::nan(""), 0.3};
  CHECK(code_of([&] { block.refresh(0, nan); }) == ErrorCode::BadProbability);
  const std::vector<double> short_col{0.1};
  CHECK(code_of([&] { block.refresh(0, short_col); }) == ErrorCode::BadProbability);
}

TEST_CASE("assembled layout") {
  const Table t({"A", "B"}, {{"a", "x"}, {"b", "y"}, {"ab", "z"}});
  EmbeddingParams ep;
  ep.dim = 4;
  const auto emb = train_embedding(t, ep);
  FeatureConfig fc;
  fc.embedding_dim = 4;
  const auto fm = assemble(t, fc, &emb);
  CHECK(fm.feature_length() == 2 + 3 + 9 + 9 + 4 + 4 + 1);

  ErrorProbabilityBlock block(3, 2);
  const auto v = fm.cell_vector({0, 0}, block);
  REQUIRE(v.blocks.size() == 4);
  CHECK(v.blocks[0].name == "text");
  CHECK(v.blocks[1].name == "metadata");
  CHECK(v.blocks[2].name == "embedding");
  CHECK(v.blocks[3].name == "error_correlation");
  CHECK(v.blocks[0].length == 5);
  CHECK(v.blocks[1].offset == 5);
  CHECK(v.blocks[2].offset == 23);
  CHECK(v.blocks[3].offset == 31);
  CHECK(v.values.size() == 32);

  const auto reg = fm.registry(0);
  CHECK(reg.size() == 32);
  CHECK(reg.name(31) == "errprob|col=B");
  CHECK(reg.name(0).find("col=A") == 0);
  for (std::size_t i = 0; i < reg.size(); ++i) {
    REQUIRE(reg.index(reg.name(i)) == i);
  }

  // embedding block absent when disabled
  fc.use_embedding = false;
  const auto no_emb = assemble(t, fc, nullptr);
  CHECK(no_emb.feature_length() == 32 - 8);
  for (const auto& b : no_emb.shared_blocks()) CHECK(b.name != "embedding");
}

TEST_CASE("error correlation block follows the probability block") {
  const Table t({"A", "B", "C"}, {{"a", "x", "1"}, {"b", "y", "2"}});
  FeatureConfig fc;
  fc.use_embedding = false;
  const auto fm = assemble(t, fc, nullptr);
  ErrorProbabilityBlock block(2, 3);
  const std::vector<double> p{0.25, 0.75};
  block.refresh(2, p);
  const auto X = fm.column_matrix(0, block);
  CHECK(X(0, X.cols() - 1) == 0.25);
  CHECK(X(1, X.cols() - 1) == 0.75);
  CHECK(X(1, X.cols() - 2) == 0.0);
}

TEST_CASE("feature properties on random tables") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 2 + rng() % 8, cols = 1 + rng() % 4;
    std::vector<std::vector<std::string>> data(rows);
    for (auto& r : data) {
      for (std::size_t c = 0; c < cols; ++c) r.push_back(testing::random_string(rng, "ab1$:", 4));
    }
    std::vector<std::string> schema;
    for (std::size_t c = 0; c < cols; ++c) schema.push_back("c" + std::to_string(c));
    const Table t(schema, data);
    FeatureConfig fc;
    fc.embedding_dim = 3;
    EmbeddingParams ep;
    ep.dim = 3;
    const auto emb = train_embedding(t, ep);
    const auto fm = assemble(t, fc, &emb);

    ErrorProbabilityBlock block(rows, cols);
    for (std::size_t c = 0; c < cols; ++c) {
      std::vector<double> p(rows);
      for (auto& x : p) x = static_cast<double>(rng() % 1000) / 999.0;
      block.refresh(c, p);
    }
    for (std::size_t c = 0; c < cols; ++c) {
      const auto X = fm.column_matrix(c, block);
      REQUIRE(X.cols() == fm.feature_length());
      for (std::size_t i = 0; i < rows; ++i) {
        const auto v = fm.cell_vector({i, c}, block);
        const auto& ec = v.blocks.back();
        REQUIRE(ec.length == cols - 1);
        for (std::size_t k = 0; k < ec.length; ++k) {
          const double x = v.values[ec.offset + k];
          REQUIRE((x >= 0.0 && x <= 1.0));
        }
        // identical values in a column share text and metadata
        for (std::size_t i2 = 0; i2 < rows; ++i2) {
          if (t.at(i, c) != t.at(i2, c)) continue;
          const auto v1 = tfidf_vector(t.at(i, c), fm.vocabularies()[c], rows);
          const auto v2 = tfidf_vector(t.at(i2, c), fm.vocabularies()[c], rows);
          REQUIRE(v1 == v2);
          const ColumnStats stats(t, c);
          REQUIRE(metadata_vector(t.at(i, c), stats) == metadata_vector(t.at(i2, c), stats));
        }
      }
      const auto reg = fm.registry(c);
      REQUIRE(reg.size() == fm.feature_length());
      for (std::size_t f = 0; f < reg.size(); ++f) REQUIRE(reg.index(reg.name(f)) == f);
    }
  }
}

TEST_CASE("adding a row leaves the layout of fixed vocabularies alone") {
  const auto t = column_table({"ab", "b", "a$"});
  const auto vocab = build_ngram_vocab(t, 0, 1);
  const auto before = tfidf_vector("ab", vocab, 3);
  // more rows change only idf weights, never positions or length
  const auto after = tfidf_vector("ab", vocab, 4);
  CHECK(before.size() == after.size());
  for (std::size_t g = 0; g < before.size(); ++g) CHECK((before[g] == 0.0) == (after[g] == 0.0));
}

TEST_CASE("registry json lists names in order") {
  FeatureRegistry reg;
  reg.add("x");
  reg.add("y");
  CHECK(reg.to_json() == R"(["x","y"])");
  CHECK_FALSE(reg.index("z"));
}
