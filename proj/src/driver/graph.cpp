#include "cocoon/driver/graph.hpp"

#include <algorithm>

namespace cocoon::driver {

using runtime::RuntimeError;

int64_t treeNodeCount(const TreeConfig &config) {
  if (config.branch < 1 || config.depth < 1)
    throw RuntimeError("tree needs B >= 1 and D >= 1");
  constexpr int64_t kLimit = int64_t(1) << 40;
  int64_t total = 0, level = 1;
  for (uint64_t d = 0; d < config.depth; ++d) {
    total += level;
    if (total > kLimit)
      throw RuntimeError("tree with B=" + std::to_string(config.branch) +
                         ", D=" + std::to_string(config.depth) + " is too large");
    if (d + 1 < config.depth) {
      if (level > kLimit / int64_t(config.branch))
        throw RuntimeError("tree is too large");
      level *= int64_t(config.branch);
    }
  }
  return total;
}

TreeLayout treeLayout(const TreeConfig &config) {
  TreeLayout l;
  l.nodes = treeNodeCount(config);
  l.rows = 4;
  l.adj = l.rows + l.nodes + 1;
  l.visited = l.adj + std::max<int64_t>(l.nodes - 1, 0);
  l.words = l.visited + l.nodes;
  return l;
}

runtime::Memory generateTree(const TreeConfig &config, size_t minWords, size_t maxWords) {
  TreeLayout l = treeLayout(config);
  if (maxWords && size_t(l.words) > maxWords)
    throw RuntimeError("tree needs " + std::to_string(l.words) + " words but memory holds " +
                       std::to_string(maxWords));
  runtime::Memory mem(std::max(size_t(l.words), minWords));
  auto &w = mem.words();
  w[0] = l.nodes;
  w[1] = l.rows;
  w[2] = l.adj;
  w[3] = l.visited;
  int64_t B = int64_t(config.branch);
  int64_t edge = 0;
  for (int64_t i = 0; i < l.nodes; ++i) {
    w[size_t(l.rows + i)] = edge;
    for (int64_t c = B * i + 1; c <= B * i + B && c < l.nodes; ++c)
      w[size_t(l.adj + edge++)] = c;
  }
  w[size_t(l.rows + l.nodes)] = edge;
  return mem;
}

} // namespace cocoon::driver
