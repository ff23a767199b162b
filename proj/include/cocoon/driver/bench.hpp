#pragma once

#include "cocoon/driver/graph.hpp"

#include <map>
#include <string>
#include <vector>

namespace cocoon::driver {

/// The traversal kernel the benchmark compiles when no source is given.
extern const char *const kVisitSource;

struct BenchConfig {
  std::string source = kVisitSource;
  TreeConfig tree;
  std::vector<uint64_t> latencies{0, 10, 100, 500};
  uint64_t stmt_cost = 1;
  std::map<std::string, unsigned> pe_counts; // default: one PE per task type
  unsigned workers = 8;                      // parallel traversal check
  uint64_t seed = 1;
};

struct BenchRow {
  uint64_t mem_latency = 0;
  uint64_t makespan_no_dae = 0;
  uint64_t makespan_dae = 0;
};

struct BenchResult {
  int64_t nodes = 0;
  std::vector<BenchRow> rows;
  int64_t visited_simulated = 0; // flags set after every simulated run, minimum
  int64_t visited_parallel = 0;
  uint64_t visit_tasks_parallel = 0;
  double parallel_seconds = 0;
};

/// Visited flags set in `memory` for a tree laid out by generateTree.
int64_t countVisited(const runtime::Memory &memory);

/// Simulates the traversal with and without DAE at each latency, then runs
/// the DAE build on the parallel executor. Throws on a diagnostic.
BenchResult runBench(const BenchConfig &config);

/// `mem_latency,makespan_no_dae,makespan_dae,gap,reduction_pct`
std::string benchCsv(const BenchResult &result);

} // namespace cocoon::driver
