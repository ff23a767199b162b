#pragma once

#include "cocoon/ir/analysis.hpp"
#include "cocoon/ir/implicit.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace cocoon::cps {

using ir::BlockId;
using ir::ExprPtr;

/// Static(n): the closure is created expecting exactly n results.
/// Dynamic: each spawn raises the expected count at run time.
struct JoinPolicy {
  enum Kind { Static, Dynamic } kind = Static;
  uint32_t count = 0;

  bool operator==(const JoinPolicy &) const = default;
};

/// Field order is fixed: return destination, ready args, placeholders.
/// Every field is one 64-bit slot.
struct ClosureLayout {
  std::string continuation;
  std::vector<std::string> ready_args;
  std::vector<std::string> placeholders;
  bool has_return_dest = true;
  JoinPolicy join;
  uint32_t payload_bits = 0;
  uint32_t padded_bits = 0;

  size_t slotCount() const;
  /// Slot of a ready arg or placeholder; slot 0 is the return destination.
  std::optional<size_t> slotOf(const std::string &name) const;
};

/// Smallest power of two that holds `payloadBits`, never below 128.
uint32_t paddedSize(uint32_t payloadBits);

struct ClosureField {
  std::string handle;
  std::string field;
};
/// A void spawn: the child only counts towards the join.
struct CounterOnly {
  std::string handle;
};
/// The child inherits the spawning task's own return destination.
struct ParentDest {};
using SpawnDest = std::variant<ClosureField, CounterOnly, ParentDest>;

struct DeclareClosure {
  std::string handle;
  size_t layout; // index into ExplicitTask::closures
};
struct SpawnTask {
  std::string callee;
  std::vector<ExprPtr> args;
  SpawnDest dest;
};

struct Stmt {
  std::variant<ir::Let, ir::Assign, ir::MemStore, DeclareClosure, SpawnTask> node;
  Span span;
};

/// Hands the closure over to the scheduler and ends the task.
struct SpawnNextTerm {
  std::string handle;
};

struct Terminator {
  std::variant<ir::IfTerm, ir::GotoTerm, ir::WhileTerm, ir::ReturnTerm, SpawnNextTerm> node;
  Span span;
};

struct Block {
  BlockId id = 0;
  std::vector<Stmt> stmts;
  Terminator term;
};

/// A terminating task function: it never waits, it only spawns, hands off
/// continuations and returns.
struct ExplicitTask {
  std::string name;
  std::string origin; // source function it was cut from
  std::vector<std::string> params;
  bool returns_value = false;
  bool is_continuation = false;
  std::vector<Block> blocks; // blocks[i].id == i, entry is block 0
  std::map<std::string, ClosureLayout> closures; // by handle

  const ClosureLayout &closure(const std::string &handle) const;
};

struct ExplicitProgram {
  std::vector<ExplicitTask> tasks;
  std::string entry;

  const ExplicitTask *find(std::string_view name) const;
};

/// A group of blocks that becomes one task: everything reachable from its
/// start without passing a sync.
struct Path {
  BlockId start;
  std::vector<BlockId> blocks; // ascending
  std::optional<BlockId> after_sync; // the sync block this path continues, if any
};

/// The first path starts at the entry, then one path per sync in block
/// order. Throws InternalError if syncs sit in loops or paths overlap.
std::vector<Path> partitionPaths(const ir::ImplicitFunction &fn);

/// True when the code after `sync` is a bare `return;`, in which case the
/// region's spawns inherit the task's destination instead of joining.
bool forwardsToParent(const ir::ImplicitFunction &fn, const ir::SyncFacts &sync);

/// Layout of the closure for one sync. `firstUse` orders the ready args.
ClosureLayout synthesizeClosure(const ir::ImplicitFunction &fn, const ir::SyncFacts &sync,
                                const std::vector<ir::SpawnSite> &sites,
                                const std::vector<std::string> &firstUse,
                                std::string continuation);

/// Splits one function at its syncs. The first task keeps the function's
/// name; continuations are `<fn>__cont<k>`, closures `c<k>`.
std::vector<ExplicitTask> lowerFunction(const ir::ImplicitFunction &fn);

ExplicitProgram lowerProgram(const ir::ImplicitProgram &program);

struct TaskRelations {
  std::set<std::string> spawns;
  std::set<std::string> spawn_nexts;
  std::set<std::string> send_arguments_to;
  bool is_root = false;
  bool returns_to_host = false;
};

using SystemRelations = std::map<std::string, TaskRelations>;

SystemRelations analyzeRelations(const ExplicitProgram &program);

/// Textual form: closures as `closure c0: f__cont0 { @ret, n, ?x }`,
/// destinations as `c0.@x`, `c0.#count` or `^parent`.
std::string dump(const ExplicitTask &task);
std::string dump(const ExplicitProgram &program);

/// Tasks reachable from the entry through spawns and spawn_nexts, in
/// program order.
std::vector<std::string> reachableTasks(const ExplicitProgram &program);

} // namespace cocoon::cps
