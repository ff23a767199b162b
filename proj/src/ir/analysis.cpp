#include "cocoon/ir/analysis.hpp"
#include "cocoon/overloaded.hpp"

#include <algorithm>
#include <deque>
#include <functional>

namespace cocoon::ir {

std::vector<SpawnSite> collectSpawnSites(const ImplicitFunction &fn) {
  std::vector<SpawnSite> out;
  for (auto &b : fn.blocks)
    for (size_t i = 0; i < b.stmts.size(); ++i) {
      auto &s = b.stmts[i];
      if (auto *x = std::get_if<SpawnAssign>(&s.node))
        out.push_back(SpawnSite{b.id, i, x->callee, x->dest, s.span});
      else if (auto *x = std::get_if<SpawnVoid>(&s.node))
        out.push_back(SpawnSite{b.id, i, x->callee, std::nullopt, s.span});
    }
  return out;
}

const SyncFacts *LivenessFacts::syncAt(BlockId block) const {
  for (auto &s : syncs)
    if (s.block == block)
      return &s;
  return nullptr;
}

std::vector<std::vector<BlockId>> predecessors(const ImplicitFunction &fn) {
  std::vector<std::vector<BlockId>> preds(fn.blocks.size());
  for (auto &b : fn.blocks)
    for (auto s : successors(b.term))
      preds.at(s).push_back(b.id);
  return preds;
}

std::set<BlockId> reachableWithinRegion(const ImplicitFunction &fn, BlockId from) {
  std::set<BlockId> seen{from};
  std::deque<BlockId> work{from};
  while (!work.empty()) {
    BlockId b = work.front();
    work.pop_front();
    auto &term = fn.block(b).term;
    if (std::holds_alternative<SyncTerm>(term.node))
      continue;
    for (auto s : successors(term))
      if (seen.insert(s).second)
        work.push_back(s);
  }
  return seen;
}

namespace {

using Succ = std::function<std::vector<size_t>(size_t)>;

// Cooper, Harvey and Kennedy's iterative algorithm over reverse postorder.
std::vector<std::optional<size_t>> computeIdoms(size_t n, size_t root, const Succ &succ,
                                                const Succ &pred) {
  std::vector<size_t> order;
  std::vector<int> state(n, 0);
  // iterative DFS producing postorder
  std::vector<std::pair<size_t, size_t>> stack{{root, 0}};
  state[root] = 1;
  while (!stack.empty()) {
    auto &[node, idx] = stack.back();
    auto ss = succ(node);
    if (idx < ss.size()) {
      size_t next = ss[idx++];
      if (!state[next]) {
        state[next] = 1;
        stack.push_back({next, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  std::vector<size_t> rpoIndex(n, SIZE_MAX);
  std::reverse(order.begin(), order.end());
  for (size_t i = 0; i < order.size(); ++i)
    rpoIndex[order[i]] = i;

  std::vector<std::optional<size_t>> idom(n);
  idom[root] = root;
  auto intersect = [&](size_t a, size_t b) {
    while (a != b) {
      while (rpoIndex[a] > rpoIndex[b])
        a = *idom[a];
      while (rpoIndex[b] > rpoIndex[a])
        b = *idom[b];
    }
    return a;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 1; i < order.size(); ++i) {
      size_t b = order[i];
      std::optional<size_t> candidate;
      for (auto p : pred(b)) {
        if (rpoIndex[p] == SIZE_MAX || !idom[p])
          continue;
        candidate = candidate ? intersect(p, *candidate) : p;
      }
      if (candidate && idom[b] != candidate) {
        idom[b] = candidate;
        changed = true;
      }
    }
  }
  idom[root].reset();
  return idom;
}

} // namespace

std::vector<std::optional<BlockId>> immediateDominators(const ImplicitFunction &fn) {
  auto preds = predecessors(fn);
  size_t n = fn.blocks.size();
  auto raw = computeIdoms(
      n, fn.entry,
      [&](size_t b) {
        std::vector<size_t> out;
        for (auto s : successors(fn.block(BlockId(b)).term))
          out.push_back(s);
        return out;
      },
      [&](size_t b) { return std::vector<size_t>(preds[b].begin(), preds[b].end()); });
  std::vector<std::optional<BlockId>> out(n);
  for (size_t i = 0; i < n; ++i)
    if (raw[i])
      out[i] = BlockId(*raw[i]);
  return out;
}

std::vector<std::optional<BlockId>> immediatePostDominators(const ImplicitFunction &fn) {
  size_t n = fn.blocks.size();
  size_t exit = n;
  auto preds = predecessors(fn);
  std::vector<size_t> returns;
  for (auto &b : fn.blocks)
    if (std::holds_alternative<ReturnTerm>(b.term.node))
      returns.push_back(b.id);
  // the reversed graph: edges run from a block to its predecessors
  auto raw = computeIdoms(
      n + 1, exit,
      [&](size_t b) {
        if (b == exit)
          return returns;
        return std::vector<size_t>(preds[b].begin(), preds[b].end());
      },
      [&](size_t b) {
        std::vector<size_t> out;
        if (b == exit)
          return out;
        auto &term = fn.block(BlockId(b)).term;
        if (std::holds_alternative<ReturnTerm>(term.node))
          out.push_back(exit);
        for (auto s : successors(term))
          out.push_back(s);
        return out;
      });
  std::vector<std::optional<BlockId>> out(n);
  for (size_t i = 0; i < n; ++i)
    if (raw[i] && *raw[i] != exit)
      out[i] = BlockId(*raw[i]);
  return out;
}

bool dominates(const std::vector<std::optional<BlockId>> &idom, BlockId a, BlockId b) {
  for (std::optional<BlockId> cur = b; cur; cur = idom[*cur])
    if (*cur == a)
      return true;
  return false;
}

BlockId commonDominator(const std::vector<std::optional<BlockId>> &idom, BlockId a, BlockId b) {
  for (std::optional<BlockId> cur = a; cur; cur = idom[*cur])
    if (dominates(idom, *cur, b))
      return *cur;
  throw InternalError("blocks without a common dominator");
}

std::vector<std::optional<BlockId>> outermostLoop(const ImplicitFunction &fn) {
  std::vector<std::optional<BlockId>> out(fn.blocks.size());
  // headers are created before their bodies, so outer loops come first
  for (auto &b : fn.blocks) {
    auto *w = std::get_if<WhileTerm>(&b.term.node);
    if (!w)
      continue;
    if (!out[b.id])
      out[b.id] = b.id;
    std::set<BlockId> seen{b.id, w->body};
    std::deque<BlockId> work{w->body};
    while (!work.empty()) {
      BlockId x = work.front();
      work.pop_front();
      if (!out[x])
        out[x] = out[b.id];
      for (auto s : successors(fn.block(x).term))
        if (seen.insert(s).second)
          work.push_back(s);
    }
  }
  return out;
}

namespace {

using VarSet = std::set<std::string>;

void transfer(const ImplicitFunction &fn, LivenessFacts &f) {
  for (size_t i = fn.blocks.size(); i-- > 0;) {
    auto &b = fn.blocks[i];
    VarSet out;
    for (auto s : successors(b.term))
      out.insert(f.live_in[s].begin(), f.live_in[s].end());
    VarSet live = out;
    for (auto &u : uses(b.term))
      live.insert(u);
    for (size_t k = b.stmts.size(); k-- > 0;) {
      if (auto d = definition(b.stmts[k]))
        live.erase(*d);
      for (auto &u : uses(b.stmts[k]))
        live.insert(u);
    }
    f.live_out[i] = std::move(out);
    f.live_in[i] = std::move(live);
  }
}

void fillSyncs(const ImplicitFunction &fn, LivenessFacts &f) {
  auto sites = collectSpawnSites(fn);
  std::vector<std::set<BlockId>> reach;
  for (auto &s : sites)
    reach.push_back(reachableWithinRegion(fn, s.block));
  for (auto &b : fn.blocks) {
    auto *sync = std::get_if<SyncTerm>(&b.term.node);
    if (!sync)
      continue;
    SyncFacts sf{b.id, sync->next, {}, {}, {}};
    for (size_t i = 0; i < sites.size(); ++i) {
      if (!reach[i].count(b.id))
        continue;
      sf.sites.push_back(i);
      if (sites[i].dest)
        sf.pending_results.push_back(*sites[i].dest);
    }
    for (auto &v : f.live_in[sync->next])
      if (std::find(sf.pending_results.begin(), sf.pending_results.end(), v) ==
          sf.pending_results.end())
        sf.carried.push_back(v);
    f.syncs.push_back(std::move(sf));
  }
}

// Forward must-defined analysis; any use outside the set may read garbage.
Diagnostics checkDefined(const ImplicitFunction &fn) {
  VarSet universe(fn.params.begin(), fn.params.end());
  for (auto &b : fn.blocks)
    for (auto &s : b.stmts)
      if (auto d = definition(s))
        universe.insert(*d);
  size_t n = fn.blocks.size();
  std::vector<VarSet> in(n, universe), out(n, universe);
  in[fn.entry] = VarSet(fn.params.begin(), fn.params.end());
  auto preds = predecessors(fn);
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < n; ++i) {
      VarSet cur;
      if (i == fn.entry) {
        cur = VarSet(fn.params.begin(), fn.params.end());
      } else {
        bool first = true;
        for (auto p : preds[i]) {
          if (first) {
            cur = out[p];
            first = false;
          } else {
            VarSet meet;
            std::set_intersection(cur.begin(), cur.end(), out[p].begin(), out[p].end(),
                                  std::inserter(meet, meet.end()));
            cur = std::move(meet);
          }
        }
      }
      in[i] = cur;
      for (auto &s : fn.blocks[i].stmts)
        if (auto d = definition(s))
          cur.insert(*d);
      if (cur != out[i]) {
        out[i] = std::move(cur);
        changed = true;
      }
    }
  }
  Diagnostics diags;
  std::set<std::string> reported;
  auto check = [&](const std::vector<std::string> &vars, const VarSet &defined, Span span) {
    for (auto &v : vars)
      if (!defined.count(v) && reported.insert(v).second)
        diags.push_back(Diagnostic{span, "`" + v + "` may be used before it is defined"});
  };
  for (size_t i = 0; i < n; ++i) {
    VarSet cur = in[i];
    for (auto &s : fn.blocks[i].stmts) {
      check(uses(s), cur, s.span);
      if (auto d = definition(s))
        cur.insert(*d);
    }
    check(uses(fn.blocks[i].term), cur, fn.blocks[i].term.span);
  }
  return diags;
}

} // namespace

LivenessFacts computeLiveness(const ImplicitFunction &fn) {
  LivenessFacts f;
  f.live_in.assign(fn.blocks.size(), {});
  f.live_out.assign(fn.blocks.size(), {});
  for (;;) {
    auto before = f.live_in;
    transfer(fn, f);
    if (before == f.live_in)
      break;
  }
  fillSyncs(fn, f);
  f.diagnostics = checkDefined(fn);
  return f;
}

LivenessFacts refineLiveness(const ImplicitFunction &fn, const LivenessFacts &facts) {
  LivenessFacts f;
  f.live_in = facts.live_in;
  f.live_out = facts.live_out;
  transfer(fn, f);
  fillSyncs(fn, f);
  f.diagnostics = checkDefined(fn);
  return f;
}

BlockId closurePlacement(const ImplicitFunction &fn, const SyncFacts &sync,
                         const std::vector<SpawnSite> &sites) {
  auto idom = immediateDominators(fn);
  BlockId d = sync.block;
  for (auto i : sync.sites)
    d = commonDominator(idom, d, sites[i].block);
  auto loops = outermostLoop(fn);
  if (loops[d]) {
    auto pre = idom[*loops[d]];
    if (!pre)
      throw InternalError("loop header without a dominator");
    d = *pre;
  }
  return d;
}

Diagnostics checkStructure(const ImplicitFunction &fn) {
  Diagnostics diags;
  auto report = [&](Span s, std::string msg) { diags.push_back(Diagnostic{s, std::move(msg)}); };
  auto loops = outermostLoop(fn);
  auto idom = immediateDominators(fn);
  auto sites = collectSpawnSites(fn);

  std::set<BlockId> loopSyncs;
  for (auto &b : fn.blocks)
    if (std::holds_alternative<SyncTerm>(b.term.node) && loops[b.id]) {
      loopSyncs.insert(b.id);
      report(b.term.span, "`sync` inside a loop body is not supported");
    }

  bool sitesOk = true;
  for (auto &site : sites) {
    auto region = reachableWithinRegion(fn, site.block);
    std::vector<BlockId> syncs;
    bool escapes = false;
    for (auto b : region) {
      auto &term = fn.block(b).term;
      if (std::holds_alternative<SyncTerm>(term.node))
        syncs.push_back(b);
      else if (std::holds_alternative<ReturnTerm>(term.node))
        escapes = true;
    }
    if (escapes) {
      report(site.span, "spawn of `" + site.callee + "` may reach a return without a `sync`");
      sitesOk = false;
    } else if (syncs.size() != 1) {
      report(site.span, "spawn of `" + site.callee + "` reaches " + std::to_string(syncs.size()) +
                            " syncs; each spawn must be joined by exactly one `sync`");
      sitesOk = false;
    } else if (site.dest) {
      if (loops[site.block]) {
        report(site.span, "spawn result `" + *site.dest +
                              "` is assigned inside a loop; only void spawns may repeat");
        sitesOk = false;
      } else if (!dominates(idom, site.block, syncs.front())) {
        report(site.span, "spawn result `" + *site.dest +
                              "` must be produced on every path to its `sync`");
        sitesOk = false;
      }
    }
  }

  // sync regions must not overlap: a sync in a branch that rejoins would
  // make the code after the join belong to two tasks
  std::vector<std::pair<BlockId, std::optional<BlockId>>> starts{{fn.entry, std::nullopt}};
  for (auto &b : fn.blocks)
    if (auto *s = std::get_if<SyncTerm>(&b.term.node))
      starts.push_back({s->next, b.id});
  std::vector<int> owner(fn.blocks.size(), -1);
  for (size_t i = 0; i < starts.size(); ++i) {
    auto region = reachableWithinRegion(fn, starts[i].first);
    bool overlap = false;
    for (auto b : region) {
      if (owner[b] >= 0)
        overlap = true;
      else
        owner[b] = int(i);
    }
    if (overlap && starts[i].second && !loopSyncs.count(*starts[i].second)) {
      report(fn.block(*starts[i].second).term.span,
             "`sync` inside a conditional branch that rejoins is not supported");
      sitesOk = false;
    }
  }

  if (!sitesOk || !loopSyncs.empty())
    return diags;

  auto facts = computeLiveness(fn);
  for (auto &sync : facts.syncs) {
    if (sync.sites.empty())
      continue;
    BlockId d = closurePlacement(fn, sync, sites);
    auto region = reachableWithinRegion(fn, d);
    bool ok = region.count(sync.block) > 0;
    for (auto b : region) {
      auto &term = fn.block(b).term;
      if (std::holds_alternative<ReturnTerm>(term.node) ||
          (std::holds_alternative<SyncTerm>(term.node) && b != sync.block))
        ok = false;
    }
    if (!ok)
      report(fn.block(sync.block).term.span,
             "some path bypasses this `sync` after its spawns' closure is created");
  }
  return diags;
}

} // namespace cocoon::ir
