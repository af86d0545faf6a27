#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cellsift/evaluation.hpp"
#include "cellsift/table.hpp"

namespace cellsift {

/// Synthetic clean tables with known functional dependencies, plus the error
/// plans the benchmark suite injects into them.
enum class Scenario {
  Convergence,      // 8 columns, every error type, rates 2-15%
  Heterogeneous,    // columns of very different difficulty
  Format,           // stripped '$' / ':' markers
  CorrelatedPair,   // 1% dependent-column errors that co-occur with another column's
};

const char* to_string(Scenario s) noexcept;
/// Throws Config.
Scenario parse_scenario(std::string_view s);

/// Employee-style table: name, city, state, salary, start_time, company,
/// position, rating. city determines state; position determines salary.
Table employee_table(std::size_t rows, std::uint64_t seed);

/// Table the scenario starts from.
Table scenario_table(Scenario s, std::size_t rows, std::uint64_t seed);
/// Error plan of the scenario, reseeded with `seed`.
InjectionPlan scenario_plan(Scenario s, std::uint64_t seed);

struct Benchmark {
  Table clean;
  Injection injected;
};

Benchmark make_benchmark(Scenario s, std::size_t rows, std::uint64_t seed);

}  // namespace cellsift
