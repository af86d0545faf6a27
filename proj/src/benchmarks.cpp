#include "cellsift/benchmarks.hpp"

#include <array>

#include "cellsift/error.hpp"
#include "cellsift/random.hpp"

namespace cellsift {

namespace {

constexpr std::array kFirstNames = {
    "Alice",  "Bruno",  "Chen",   "Dmitri", "Elena",  "Farah",  "Gustav", "Hana",   "Ivan",   "Jamal",
    "Keiko",  "Liam",   "Mona",   "Nikhil", "Olga",   "Pedro",  "Quinn",  "Rosa",   "Sven",   "Tariq",
    "Ursula", "Viktor", "Wen",    "Ximena", "Yusuf",  "Zoe",    "Amara",  "Bjorn",  "Carmen", "Dario",
    "Emeka",  "Freya",  "Goran",  "Helga",  "Ines",   "Jonas",  "Kiran",  "Leila",  "Marco",  "Nadia",
    "Oscar",  "Priya",  "Rafael", "Sakura", "Tomas",  "Uma",    "Vera",   "Wilma",  "Yara",   "Zeno"};

struct CityState {
  const char* city;
  const char* state;
};
constexpr CityState kCities[] = {
    {"Albany", "NY"},      {"Buffalo", "NY"},     {"Rochester", "NY"},  {"Austin", "TX"},
    {"Dallas", "TX"},               {"Houston", "TX"},     {"El Paso", "TX"},    {"Fresno", "CA"},
    {"Oakland", "CA"},              {"San Diego", "CA"},   {"Sacramento", "CA"}, {"Tampa", "FL"},
    {"Orlando", "FL"},              {"Miami", "FL"},       {"Chicago", "IL"},    {"Peoria", "IL"},
    {"Boston", "MA"},               {"Worcester", "MA"},   {"Denver", "CO"},     {"Boulder", "CO"},
    {"Seattle", "WA"},              {"Spokane", "WA"},     {"Portland", "OR"},   {"Eugene", "OR"},
    {"Phoenix", "AZ"},              {"Tucson", "AZ"},      {"Atlanta", "GA"},    {"Savannah", "GA"},
    {"Detroit", "MI"},              {"Lansing", "MI"}};

struct Position {
  const char* title;
  int salary_low;
  int salary_high;
};
constexpr Position kPositions[] = {
    {"Analyst", 52000, 58000},   {"Engineer", 74000, 81000},   {"Senior Engineer", 96000, 104000},
    {"Manager", 88000, 93000},           {"Senior Manager", 112000, 120000}, {"Director", 135000, 142000},
    {"Designer", 61000, 66000},          {"Accountant", 57000, 63000}, {"Recruiter", 49000, 54000},
    {"Technician", 43000, 47000},        {"Consultant", 79000, 86000}, {"Architect", 118000, 126000}};

constexpr std::array kCompanies = {"Acme",   "Globex",  "Initech", "Hooli",   "Umbrella", "Vandelay", "Stark",
                                   "Wayne",  "Tyrell",  "Cyberdyne", "Soylent", "Wonka",  "Gringotts", "Oscorp",
                                   "Aperture", "Massive", "Nakatomi", "Monarch", "Pied Piper", "Dunder"};

constexpr std::array kStartTimes = {"07:00", "07:30", "08:00", "08:30", "09:00", "09:30",
                                    "10:00", "12:00", "13:00", "14:00", "16:00", "22:00"};

constexpr std::array kRatings = {"1.0", "1.5", "2.0", "2.5", "3.0", "3.5", "4.0", "4.5", "5.0"};

template <class A>
std::size_t pick(Rng& rng, const A& a) {
  return static_cast<std::size_t>(rng.below(std::size(a)));
}

std::string dollars(int amount) { return "$" + std::to_string(amount); }

std::string clock_time(int minutes) {
  const int h = minutes / 60, m = minutes % 60;
  std::string out = (h < 10 ? "0" : "") + std::to_string(h) + ":" + (m < 10 ? "0" : "") + std::to_string(m);
  return out;
}

ColumnInjection col(std::string name, double rate, std::vector<ErrorType> types, std::string markers = "$:") {
  ColumnInjection c;
  c.column = std::move(name);
  c.rate = rate;
  c.types = std::move(types);
  c.markers = std::move(markers);
  return c;
}

// Pay grades and shift slots repeat; a stripped marker leaves the digits, so
// word tokens of a dirty value equal those of its clean value.
Table format_table(std::size_t rows, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0xF0F0}));
  std::vector<std::vector<std::string>> cells(rows);
  for (auto& r : cells) {
    const auto& p = kPositions[pick(rng, kPositions)];
    r.push_back(p.title);
    r.push_back(dollars(p.salary_low + 1500 * static_cast<int>(rng.below(4))));
    r.push_back(clock_time(6 * 60 + 30 * static_cast<int>(rng.below(28))));
    r.push_back(dollars(500 * (1 + static_cast<int>(rng.below(30)))));
    r.push_back(kCompanies[pick(rng, kCompanies)]);
  }
  return Table({"position", "salary", "start_time", "bonus", "company"}, std::move(cells));
}

}  // namespace

const char* to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::Convergence: return "convergence";
    case Scenario::Heterogeneous: return "heterogeneous";
    case Scenario::Format: return "format";
    case Scenario::CorrelatedPair: return "correlated_pair";
  }
  return "convergence";
}

Scenario parse_scenario(std::string_view s) {
  for (auto sc : {Scenario::Convergence, Scenario::Heterogeneous, Scenario::Format, Scenario::CorrelatedPair}) {
    if (s == to_string(sc)) return sc;
  }
  throw Error(ErrorCode::Config, "unknown scenario '" + std::string(s) + "'");
}

Table employee_table(std::size_t rows, std::uint64_t seed) {
  if (rows == 0) throw Error(ErrorCode::EmptyTable, "benchmark table needs at least one row");
  Rng rng(derive_seed(seed, {0xE3B1}));
  std::vector<std::vector<std::string>> cells(rows);
  for (auto& r : cells) {
    const auto& place = kCities[pick(rng, kCities)];
    const auto& pos = kPositions[pick(rng, kPositions)];
    r.push_back(kFirstNames[pick(rng, kFirstNames)]);
    r.push_back(place.city);
    r.push_back(place.state);
    r.push_back(dollars(rng.below(2) ? pos.salary_low : pos.salary_high));
    r.push_back(kStartTimes[pick(rng, kStartTimes)]);
    r.push_back(kCompanies[pick(rng, kCompanies)]);
    r.push_back(pos.title);
    r.push_back(kRatings[pick(rng, kRatings)]);
  }
  return Table({"name", "city", "state", "salary", "start_time", "company", "position", "rating"}, std::move(cells));
}

Table scenario_table(Scenario s, std::size_t rows, std::uint64_t seed) {
  if (s == Scenario::Format) return format_table(rows, seed);
  return employee_table(rows, seed);
}

InjectionPlan scenario_plan(Scenario s, std::uint64_t seed) {
  using T = ErrorType;
  InjectionPlan plan;
  plan.seed = seed;
  switch (s) {
    case Scenario::Convergence:
      plan.rules = {{"city", "state"}, {"position", "salary"}};
      plan.columns = {col("name", 0.04, {T::Typo}),
                      col("city", 0.05, {T::Typo, T::Missing}),
                      col("state", 0.02, {T::CrossColumnViolation, T::Typo}),
                      col("salary", 0.08, {T::FormatViolation, T::CrossColumnViolation}, "$"),
                      col("start_time", 0.15, {T::FormatViolation}, ":"),
                      col("company", 0.06, {T::Missing, T::Typo}),
                      col("position", 0.03, {T::Typo}),
                      col("rating", 0.02, {T::Typo, T::Missing})};
      plan.pairs = {{"company", "rating", 0.02, T::Typo, T::Missing}};
      break;
    case Scenario::Heterogeneous:
      plan.rules = {{"city", "state"}};
      plan.columns = {col("name", 0.08, {T::Typo}),
                      col("city", 0.03, {T::Missing}),
                      col("state", 0.04, {T::CrossColumnViolation, T::Typo}),
                      col("salary", 0.10, {T::FormatViolation}, "$"),
                      col("start_time", 0.10, {T::FormatViolation}, ":"),
                      col("company", 0.06, {T::Typo, T::Missing}),
                      col("position", 0.05, {T::Typo}),
                      col("rating", 0.12, {T::Typo})};
      break;
    case Scenario::Format:
      plan.columns = {col("salary", 0.10, {T::FormatViolation}, "$"),
                      col("start_time", 0.10, {T::FormatViolation}, ":"),
                      col("bonus", 0.10, {T::FormatViolation}, "$")};
      break;
    case Scenario::CorrelatedPair:
      // Rows from an unreliable source: a malformed start time goes with a
      // salary that belongs to another position (a few are plain typos).
      plan.rules = {{"position", "salary"}};
      plan.pairs = {{"start_time", "salary", 0.008, T::FormatViolation, T::CrossColumnViolation},
                    {"start_time", "salary", 0.002, T::FormatViolation, T::Typo}};
      plan.columns = {col("rating", 0.05, {T::Typo})};
      break;
  }
  return plan;
}

Benchmark make_benchmark(Scenario s, std::size_t rows, std::uint64_t seed) {
  Table clean = scenario_table(s, rows, seed);
  auto injected = inject_errors(clean, scenario_plan(s, seed));
  return Benchmark{std::move(clean), std::move(injected)};
}

}  // namespace cellsift
