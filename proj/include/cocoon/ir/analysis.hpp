#pragma once

#include "cocoon/ir/implicit.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cocoon::ir {

struct SpawnSite {
  BlockId block;
  size_t index; // position in the block's statement list
  std::string callee;
  std::optional<std::string> dest; // none for a void spawn
  Span span;
};

/// Every spawn of the function in program order (block id, then position).
std::vector<SpawnSite> collectSpawnSites(const ImplicitFunction &fn);

/// What crosses one sync boundary.
struct SyncFacts {
  BlockId block; // block terminated by the sync
  BlockId next;  // first block after it
  std::vector<size_t> sites;                // indices into collectSpawnSites()
  std::vector<std::string> pending_results; // destinations of those sites, program order
  std::vector<std::string> carried;         // live after the sync, sorted by name
};

struct LivenessFacts {
  std::vector<std::set<std::string>> live_in;
  std::vector<std::set<std::string>> live_out;
  std::vector<SyncFacts> syncs; // ordered by block id
  Diagnostics diagnostics;      // uses that may see no definition

  const SyncFacts *syncAt(BlockId block) const;
};

LivenessFacts computeLiveness(const ImplicitFunction &fn);

/// Applies the transfer functions once more, starting from `facts`. A true
/// fixpoint comes back unchanged.
LivenessFacts refineLiveness(const ImplicitFunction &fn, const LivenessFacts &facts);

std::vector<std::vector<BlockId>> predecessors(const ImplicitFunction &fn);

/// Immediate dominators; the entry maps to nullopt.
std::vector<std::optional<BlockId>> immediateDominators(const ImplicitFunction &fn);

/// Immediate post-dominators against a virtual exit joining all returns;
/// blocks whose only post-dominator is that exit map to nullopt.
std::vector<std::optional<BlockId>> immediatePostDominators(const ImplicitFunction &fn);

bool dominates(const std::vector<std::optional<BlockId>> &idom, BlockId a, BlockId b);
BlockId commonDominator(const std::vector<std::optional<BlockId>> &idom, BlockId a, BlockId b);

/// For each block, the header of the outermost loop containing it.
std::vector<std::optional<BlockId>> outermostLoop(const ImplicitFunction &fn);

/// Blocks reachable from `from` (inclusive) without leaving through a sync.
std::set<BlockId> reachableWithinRegion(const ImplicitFunction &fn, BlockId from);

/// Spawn/sync shapes the explicit lowering cannot express: syncs in loops,
/// spawns reaching no sync or several syncs, value spawns that do not
/// dominate their sync or sit in a loop, overlapping sync regions, and
/// closure placement points with a path around the sync.
Diagnostics checkStructure(const ImplicitFunction &fn);

/// Where the closure of the sync ending `syncBlock` is declared: the nearest
/// common dominator of the region's spawns and the sync, moved out of loops.
BlockId closurePlacement(const ImplicitFunction &fn, const SyncFacts &sync,
                         const std::vector<SpawnSite> &sites);

} // namespace cocoon::ir
