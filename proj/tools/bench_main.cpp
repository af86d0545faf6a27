// Runs a synthetic scenario end to end with the oracle labeler and prints
// the convergence curve.
#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "cellsift/active_learner.hpp"
#include "cellsift/benchmarks.hpp"
#include "cellsift/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"cellsift synthetic benchmark runner"};
  std::string scenario = "convergence", config_json = "{}";
  std::size_t rows = 2000;
  std::uint64_t seed = 1;
  app.add_option("--scenario", scenario);
  app.add_option("--rows", rows);
  app.add_option("--seed", seed);
  app.add_option("--config", config_json, "session config as JSON text");
  int watch = -1;
  std::string plan_path;
  app.add_option("--plan", plan_path, "injection plan JSON replacing the scenario's own");
  app.add_option("--column", watch, "also print the F1 of this column");
  CLI11_PARSE(app, argc, argv);

  try {
    auto bench = cellsift::make_benchmark(cellsift::parse_scenario(scenario), rows, seed);
    if (!plan_path.empty()) {
      auto plan = cellsift::InjectionPlan::load(plan_path);
      plan.seed = seed;
      bench.injected = cellsift::inject_errors(bench.clean, plan);
    }
    auto config = cellsift::SessionConfig::from_json(config_json);
    const auto t0 = std::chrono::steady_clock::now();
    cellsift::Session session(bench.injected.dirty, bench.injected.truth, config);
    const auto t1 = std::chrono::steady_clock::now();
    std::printf("errors %zu, setup %.2fs\n", bench.injected.mutated.size(),
                std::chrono::duration<double>(t1 - t0).count());
    while (session.pending_batch()) {
      auto s = session.submit(session.oracle_answers());
      if (s.global && watch >= 0) {
        const auto c = cellsift::score_column(session.final_predictions(), bench.injected.truth,
                                              bench.injected.dirty, static_cast<std::size_t>(watch));
        std::printf("     %zu column %d: P=%.3f R=%.3f F1=%.3f own=%zu\n", s.labels_used, watch, c.precision, c.recall, c.f1, s.per_column[static_cast<std::size_t>(watch)].labels);
      }
      if (s.global) {
        std::printf("%4zu  col=%-3s P=%.3f R=%.3f F1=%.3f  t=%.1fs\n", s.labels_used,
                    s.column ? std::to_string(*s.column).c_str() : "-", s.global->precision, s.global->recall,
                    s.global->f1,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      }
    }
    if (watch >= 0) {
      // root splits of the committee on the watched column
      const auto& m = session.models()[static_cast<std::size_t>(watch)];
      const auto reg = session.features().registry(static_cast<std::size_t>(watch));
      std::map<std::string, int> roots;
      for (const auto& t : m.committee.trees()) {
        if (!t.nodes().empty() && !t.root().is_leaf()) ++roots[reg.name(static_cast<std::size_t>(t.root().feature))];
      }
      for (const auto& [name, n] : roots) std::printf("  root %-40s %d\n", name.c_str(), n);
    }
    for (const auto& c : session.column_summaries()) {
      std::printf("%-12s labels=%3zu err=%3zu cert=%.3f cv=%.3f deg=%d\n", c.name.c_str(), c.labels,
                  c.erroneous_labels, c.mean_certainty, c.cv_f1, c.degenerate);
    }
  } catch (const cellsift::Error& e) {
    std::cerr << cellsift::error_code_name(e.code()) << ": " << e.what() << "\n";
    return 1;
  }
}
