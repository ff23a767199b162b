#pragma once

#include "cocoon/runtime/memory.hpp"

#include <cstdint>

namespace cocoon::driver {

/// Complete B-ary tree of depth D stored as CSR in memory.
///
/// Header words: mem[0] = node count, mem[1] = row table base,
/// mem[2] = adjacency base, mem[3] = visited-flag base. The row table has
/// N + 1 monotone offsets into the adjacency array; node i's children are
/// B*i + 1 .. B*i + B, so node ids follow breadth-first order.
struct TreeConfig {
  uint64_t branch = 4;
  uint64_t depth = 7;
};

struct TreeLayout {
  int64_t nodes = 0;
  int64_t rows = 0;
  int64_t adj = 0;
  int64_t visited = 0;
  int64_t words = 0; // memory needed
};

/// (B^D - 1) / (B - 1), or D when B = 1. Throws RuntimeError on overflow.
int64_t treeNodeCount(const TreeConfig &config);

TreeLayout treeLayout(const TreeConfig &config);

/// Writes the tree into a fresh memory of at least `minWords` words.
/// Throws RuntimeError if `maxWords` is nonzero and too small.
runtime::Memory generateTree(const TreeConfig &config, size_t minWords = 0, size_t maxWords = 0);

} // namespace cocoon::driver
