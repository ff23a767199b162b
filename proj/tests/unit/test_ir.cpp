#include "ast_interp.hpp"
#include "harness.hpp"

#include "cocoon/frontend/parser.hpp"
#include "cocoon/ir/analysis.hpp"
#include "cocoon/runtime/oracle.hpp"

#include <doctest.h>

#include <queue>

using namespace cocoon;
using namespace cocoon::ir;

namespace {

ImplicitProgram build(std::string_view src) { return buildProgram(frontend::parseSource(src)); }

template <class T> bool isTerm(const BasicBlock &b) {
  return std::holds_alternative<T>(b.term.node);
}

size_t countSyncs(const ImplicitFunction &fn) {
  size_t n = 0;
  for (auto &b : fn.blocks)
    n += isTerm<SyncTerm>(b);
  return n;
}

std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// CFG well-formedness checked from first principles.
void checkWellFormed(const ImplicitFunction &fn) {
  CAPTURE(fn.name);
  REQUIRE(!fn.blocks.empty());
  std::vector<int> incoming(fn.blocks.size(), 0);
  for (size_t i = 0; i < fn.blocks.size(); ++i) {
    auto &b = fn.blocks[i];
    CHECK(b.id == i);
    auto succ = successors(b.term);
    CHECK(succ.empty() == isTerm<ReturnTerm>(b));
    for (auto s : succ) {
      REQUIRE(s < fn.blocks.size());
      ++incoming[s];
    }
  }
  CHECK(incoming[fn.entry] == 0);
  std::vector<bool> seen(fn.blocks.size(), false);
  std::queue<BlockId> q;
  q.push(fn.entry);
  seen[fn.entry] = true;
  while (!q.empty()) {
    auto b = q.front();
    q.pop();
    for (auto s : successors(fn.block(b).term))
      if (!seen[s]) {
        seen[s] = true;
        q.push(s);
      }
  }
  for (size_t i = 0; i < seen.size(); ++i)
    CHECK_MESSAGE(seen[i], "block b" << i << " is unreachable");
  // every cycle passes through a while header: dropping back-edges into
  // headers leaves the graph acyclic
  std::vector<int> state(fn.blocks.size(), 0);
  std::function<bool(BlockId)> acyclic = [&](BlockId b) {
    state[b] = 1;
    for (auto s : successors(fn.block(b).term)) {
      if (state[s] == 1) {
        if (!isTerm<WhileTerm>(fn.block(s)))
          return false;
        continue;
      }
      if (state[s] == 0 && !acyclic(s))
        return false;
    }
    state[b] = 2;
    return true;
  };
  CHECK(acyclic(fn.entry));
}

} // namespace

TEST_CASE("fibonacci CFG has four blocks") {
  auto p = testing::compileCase("fib");
  auto &fn = p.implicit.functions[0];
  REQUIRE(fn.blocks.size() == 4);
  CHECK(isTerm<IfTerm>(fn.blocks[0]));
  CHECK(isTerm<ReturnTerm>(fn.blocks[1]));
  CHECK(fn.blocks[2].stmts.size() == 2);
  CHECK(isTerm<SyncTerm>(fn.blocks[2]));
  CHECK(isTerm<ReturnTerm>(fn.blocks[3]));
  CHECK(std::get<SyncTerm>(fn.blocks[2].term.node).next == 3);
}

TEST_CASE("single return is a single block") {
  auto p = build("task i64 f() { return 0; }");
  REQUIRE(p.functions[0].blocks.size() == 1);
  CHECK(isTerm<ReturnTerm>(p.functions[0].blocks[0]));
}

TEST_CASE("two sequential syncs make three regions") {
  auto p = testing::compileCase("two_sync");
  auto &fn = *p.implicit.find("two_sync");
  CHECK(countSyncs(fn) == 2);
  auto facts = computeLiveness(fn);
  REQUIRE(facts.syncs.size() == 2);
  // regions: entry, after the first sync, after the second
  auto r0 = reachableWithinRegion(fn, fn.entry);
  auto r1 = reachableWithinRegion(fn, facts.syncs[0].next);
  auto r2 = reachableWithinRegion(fn, facts.syncs[1].next);
  CHECK(r0.count(facts.syncs[0].block));
  CHECK(r1.count(facts.syncs[1].block));
  CHECK(isTerm<ReturnTerm>(fn.block(*r2.rbegin())));
}

TEST_CASE("fibonacci liveness at the sync") {
  auto p = testing::compileCase("fib");
  auto facts = computeLiveness(p.implicit.functions[0]);
  REQUIRE(facts.syncs.size() == 1);
  CHECK(facts.syncs[0].carried.empty());
  CHECK(facts.syncs[0].pending_results == std::vector<std::string>{"x", "y"});
}

TEST_CASE("a parameter used after the sync is carried") {
  auto p = build(R"(task i64 fib(i64 n) {
    if (n < 2) { return n; }
    let x = spawn fib(n - 1);
    let y = spawn fib(n - 2);
    sync;
    return x + n;
  })");
  auto facts = computeLiveness(p.functions[0]);
  REQUIRE(facts.syncs.size() == 1);
  CHECK(facts.syncs[0].carried == std::vector<std::string>{"n"});
}

TEST_CASE("dead variables are not carried") {
  auto p = testing::compileCase("carried");
  auto facts = computeLiveness(*p.implicit.find("carried"));
  REQUIRE(facts.syncs.size() == 1);
  CHECK(facts.syncs[0].carried == std::vector<std::string>{"base", "t"});
}

TEST_CASE("spawn sites") {
  auto fib = testing::compileCase("fib");
  auto sites = collectSpawnSites(fib.implicit.functions[0]);
  REQUIRE(sites.size() == 2);
  CHECK(sites[0].callee == "fib");
  CHECK(sites[1].callee == "fib");
  CHECK(sites[0].dest == std::optional<std::string>("x"));
  CHECK(sites[1].dest == std::optional<std::string>("y"));

  CHECK(collectSpawnSites(build("task i64 f() { return 0; }").functions[0]).empty());

  auto visit = testing::compileCase("visit", false);
  auto &fn = visit.implicit.functions[0];
  auto vs = collectSpawnSites(fn);
  REQUIRE(vs.size() == 1);
  CHECK(vs[0].callee == "visit");
  CHECK(!vs[0].dest);
  auto loops = outermostLoop(fn);
  CHECK(loops[vs[0].block].has_value());
}

TEST_CASE("every corpus CFG is well formed") {
  for (auto &c : testing::corpus()) {
    CAPTURE(c.name);
    auto comp = testing::compileCase(c.name);
    for (auto *prog : {&comp.implicit, &comp.post_dae})
      for (auto &fn : prog->functions)
        checkWellFormed(fn);
  }
}

TEST_CASE("liveness invariants hold across the corpus") {
  for (auto &c : testing::corpus()) {
    CAPTURE(c.name);
    auto comp = testing::compileCase(c.name);
    for (auto &fn : comp.post_dae.functions) {
      auto facts = computeLiveness(fn);
      CHECK(facts.diagnostics.empty());
      // a fixpoint: one more round of transfer functions changes nothing
      auto again = refineLiveness(fn, facts);
      CHECK(again.live_in == facts.live_in);
      CHECK(again.live_out == facts.live_out);
      auto idom = immediateDominators(fn);
      for (auto &s : facts.syncs) {
        for (auto &v : s.carried)
          CHECK(std::find(s.pending_results.begin(), s.pending_results.end(), v) ==
                s.pending_results.end());
        // every carried variable is a parameter or defined in a block that
        // dominates the sync
        for (auto &v : s.carried) {
          bool ok = std::find(fn.params.begin(), fn.params.end(), v) != fn.params.end();
          for (auto &b : fn.blocks)
            for (auto &st : b.stmts)
              if (definition(st) == std::optional<std::string>(v) &&
                  dominates(idom, b.id, s.block))
                ok = true;
          CHECK_MESSAGE(ok, v << " carried without a dominating definition");
        }
      }
    }
  }
}

TEST_CASE("CFG construction is deterministic") {
  for (auto &c : testing::corpus()) {
    auto a = testing::compileCase(c.name), b = testing::compileCase(c.name);
    CHECK(equal(a.implicit, b.implicit));
    CHECK(dump(a.implicit) == dump(b.implicit));
  }
}

TEST_CASE("use before definition on some path is diagnosed") {
  ImplicitFunction fn;
  fn.name = "f";
  fn.params = {"c"};
  fn.returns_value = true;
  fn.blocks.resize(4);
  for (BlockId i = 0; i < 4; ++i)
    fn.blocks[i].id = i;
  fn.blocks[0].term.node = IfTerm{ast::makeVar("c"), 1, 2};
  fn.blocks[1].stmts.push_back(Stmt{Let{"v", ast::makeInt(1)}, {}, false});
  fn.blocks[1].term.node = GotoTerm{3};
  fn.blocks[2].term.node = GotoTerm{3};
  fn.blocks[3].term.node = ReturnTerm{ast::makeVar("v")};
  auto facts = computeLiveness(fn);
  REQUIRE(facts.diagnostics.size() == 1);
  CHECK(facts.diagnostics[0].message == "`v` may be used before it is defined");
}

TEST_CASE("unsupported spawn and sync shapes are rejected") {
  auto shapes = {
      // sync in a branch that rejoins
      "task i64 g() { return 1; } task i64 f(i64 c) { let x = 0; if (c) { x = spawn g(); sync; } return x; }",
      // a value spawn that does not dominate its sync
      "task i64 g() { return 1; } task i64 f(i64 c) { let x = 0; if (c) { x = spawn g(); } sync; return x; }",
      // a value spawn in a loop
      "task i64 g() { return 1; } task i64 f(i64 n) { let x = 0; while (n > 0) { x = spawn g(); n = n - 1; } sync; return x; }",
  };
  for (auto *src : shapes) {
    CAPTURE(src);
    auto r = driver::compile(src);
    CHECK(!r.ok());
  }
}

TEST_CASE("implicit walk matches the AST interpreter on every corpus program") {
  std::mt19937_64 rng(17);
  for (auto &c : testing::corpus()) {
    CAPTURE(c.name);
    auto comp = testing::compileCase(c.name);
    for (int i = 0; i < 100; ++i) {
      auto in = c.generate(rng);
      auto ref = testing::interpret(comp.ast, in.args, in.memory);
      runtime::Memory mem(in.memory);
      auto got = runtime::runOracle(comp.implicit, in.args, mem);
      REQUIRE(got.value == ref.value);
      REQUIRE(mem.words() == ref.memory);
    }
  }
}
