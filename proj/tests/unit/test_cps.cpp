#include "harness.hpp"
#include "relation_scan.hpp"

#include "cocoon/cps/explicit.hpp"
#include "cocoon/frontend/parser.hpp"
#include "cocoon/ir/analysis.hpp"
#include "cocoon/overloaded.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>

using namespace cocoon;
using namespace cocoon::cps;

namespace {

template <class F> void eachSpawn(const ExplicitTask &t, F &&f) {
  for (auto &b : t.blocks)
    for (auto &s : b.stmts)
      if (auto *sp = std::get_if<SpawnTask>(&s.node))
        f(b.id, *sp);
}

std::vector<BlockId> succ(const Block &b) {
  return std::visit(Overloaded{
                        [](const ir::IfTerm &x) { return std::vector<BlockId>{x.then_block, x.else_block}; },
                        [](const ir::WhileTerm &x) { return std::vector<BlockId>{x.body, x.exit}; },
                        [](const ir::GotoTerm &x) { return std::vector<BlockId>{x.target}; },
                        [](const auto &) { return std::vector<BlockId>{}; },
                    },
                    b.term.node);
}

std::optional<BlockId> declaringBlock(const ExplicitTask &t, const std::string &handle) {
  for (auto &b : t.blocks)
    for (auto &s : b.stmts)
      if (auto *d = std::get_if<DeclareClosure>(&s.node); d && d->handle == handle)
        return b.id;
  return std::nullopt;
}

bool isNextOf(const Block &b, const std::string &handle) {
  auto *n = std::get_if<SpawnNextTerm>(&b.term.node);
  return n && n->handle == handle;
}

} // namespace

TEST_CASE("padded size is the next power of two, at least 128") {
  CHECK(paddedSize(64) == 128);
  CHECK(paddedSize(128) == 128);
  CHECK(paddedSize(192) == 256);
  CHECK(paddedSize(320) == 512);
  CHECK(paddedSize(513) == 1024);
  for (uint32_t bits = 1; bits <= 8192; ++bits) {
    auto p = paddedSize(bits);
    CHECK((p & (p - 1)) == 0);
    CHECK(p >= std::max(128u, bits));
    CHECK(p < 2 * std::max(128u, bits));
  }
}

TEST_CASE("fibonacci: two paths, two tasks, one closure") {
  auto c = testing::compileCase("fib");
  auto &fn = c.post_dae.functions[0];
  auto paths = partitionPaths(fn);
  REQUIRE(paths.size() == 2);
  CHECK(paths[0].start == fn.entry);
  CHECK(paths[1].start == 3);
  CHECK(paths[1].after_sync == std::optional<BlockId>(2));

  REQUIRE(c.lowered.tasks.size() == 2);
  auto &fib = c.lowered.tasks[0];
  auto &cont = c.lowered.tasks[1];
  CHECK(fib.name == "fib");
  CHECK(cont.name == "fib__cont0");
  CHECK(cont.is_continuation);
  CHECK(cont.params == std::vector<std::string>{"x", "y"});
  REQUIRE(fib.closures.size() == 1);
  auto &layout = fib.closure("c0");
  CHECK(layout.continuation == "fib__cont0");
  CHECK(layout.ready_args.empty());
  CHECK(layout.placeholders == std::vector<std::string>{"x", "y"});
  CHECK(layout.has_return_dest);
  CHECK(layout.payload_bits == 192);
  CHECK(layout.padded_bits == 256);
  CHECK(layout.join.kind == JoinPolicy::Static);
  CHECK(layout.join.count == 2);

  std::vector<std::string> fields;
  eachSpawn(fib, [&](BlockId, const SpawnTask &s) {
    CHECK(s.callee == "fib");
    fields.push_back(std::get<ClosureField>(s.dest).field);
  });
  CHECK(fields == std::vector<std::string>{"x", "y"});
}

TEST_CASE("a function without sync is one path and one task") {
  auto c = testing::compileCase("single");
  auto &fn = c.post_dae.functions[0];
  auto paths = partitionPaths(fn);
  REQUIRE(paths.size() == 1);
  CHECK(paths[0].blocks.size() == fn.blocks.size());
  REQUIRE(c.lowered.tasks.size() == 1);
  CHECK(c.lowered.tasks[0].closures.empty());
  CHECK(dump(c.lowered) == "task poly(x) -> i64\n  b0:\n    T: return x * x * 3 - x + 7\n");
}

TEST_CASE("two sequential syncs chain three paths") {
  auto c = testing::compileCase("two_sync");
  auto &fn = *c.post_dae.find("two_sync");
  auto facts = ir::computeLiveness(fn);
  auto paths = partitionPaths(fn);
  REQUIRE(paths.size() == 3);
  CHECK(paths[1].start == facts.syncs[0].next);
  CHECK(paths[2].start == facts.syncs[1].next);
  auto *cont0 = c.lowered.find("two_sync__cont0");
  REQUIRE(cont0);
  REQUIRE(cont0->closures.size() == 1);
  CHECK(cont0->closures.begin()->second.continuation == "two_sync__cont1");
  CHECK(c.lowered.find("two_sync__cont1"));
}

TEST_CASE("paths partition the blocks") {
  for (auto &c : testing::corpus()) {
    CAPTURE(c.name);
    auto comp = testing::compileCase(c.name);
    for (auto &fn : comp.post_dae.functions) {
      std::vector<int> owner(fn.blocks.size(), 0);
      for (auto &p : partitionPaths(fn))
        for (auto b : p.blocks)
          ++owner[b];
      for (size_t i = 0; i < owner.size(); ++i)
        CHECK_MESSAGE(owner[i] == 1, fn.name << " b" << i << " owned by " << owner[i] << " paths");
    }
  }
}

TEST_CASE("void continuation with one carried value pads to 128 bits") {
  auto c = testing::compileText(
      "task void g() { } task void f(i64 n) { spawn g(); sync; mem[n] = 1; }");
  auto &layout = c.lowered.find("f")->closure("c0");
  CHECK(layout.ready_args == std::vector<std::string>{"n"});
  CHECK(layout.placeholders.empty());
  CHECK(layout.padded_bits == 128);
  CHECK(layout.join.kind == JoinPolicy::Static);
  CHECK(layout.join.count == 1);
}

TEST_CASE("DAE visit: the executor closure carries the graph bases and node") {
  auto c = testing::compileCase("visit");
  auto &layout = c.lowered.find("visit")->closure("c0");
  auto ready = layout.ready_args;
  std::sort(ready.begin(), ready.end());
  CHECK(ready == std::vector<std::string>{"adj", "n", "rows", "vis"});
  CHECK(layout.placeholders == std::vector<std::string>{"row"});
  CHECK(layout.padded_bits == 512);
}

TEST_CASE("join policies") {
  auto loop = testing::compileCase("void_spawn_loop");
  CHECK(loop.lowered.find("sum_squares")->closure("c0").join.kind == JoinPolicy::Dynamic);
  auto chained = testing::compileCase("chained");
  auto &c0 = chained.lowered.find("chained")->closure("c0");
  CHECK(c0.join.kind == JoinPolicy::Static);
  CHECK(c0.join.count == 2);
  CHECK(c0.placeholders == std::vector<std::string>{"k"});
}

TEST_CASE("a trailing sync before a bare return forwards to the parent") {
  auto c = testing::compileCase("mem_writer");
  auto *t = c.lowered.find("mem_writer");
  REQUIRE(t);
  CHECK(t->closures.empty());
  CHECK(c.lowered.tasks.size() == 2);
  eachSpawn(*t, [](BlockId, const SpawnTask &s) { CHECK(std::holds_alternative<ParentDest>(s.dest)); });
  auto visit = testing::compileCase("visit", false);
  CHECK(visit.lowered.tasks.size() == 1);
}

TEST_CASE("explicit-IR invariants across the corpus") {
  for (auto &c : testing::corpus()) {
    CAPTURE(c.name);
    auto comp = testing::compileCase(c.name);
    CHECK(dump(comp.lowered).find("T: sync") == std::string::npos);
    for (auto &t : comp.lowered.tasks) {
      CAPTURE(t.name);
      std::map<std::pair<std::string, std::string>, int> writers;
      eachSpawn(t, [&](BlockId b, const SpawnTask &s) {
        std::visit(Overloaded{
                       [&](const ClosureField &d) {
                         REQUIRE(t.closures.count(d.handle));
                         auto decl = declaringBlock(t, d.handle);
                         REQUIRE(decl);
                         CHECK(*decl <= b);
                         ++writers[{d.handle, d.field}];
                       },
                       [&](const CounterOnly &d) { CHECK(t.closures.count(d.handle)); },
                       [](const ParentDest &) {},
                   },
                   s.dest);
      });
      for (auto &[handle, layout] : t.closures) {
        CHECK(layout.payload_bits == 64 * layout.slotCount());
        CHECK(layout.padded_bits == paddedSize(layout.payload_bits));
        if (layout.join.kind == JoinPolicy::Static)
          for (auto &p : layout.placeholders)
            CHECK(writers[{handle, p}] == 1);
        // every path from the declaration to an exit issues spawn_next once
        auto decl = declaringBlock(t, handle);
        REQUIRE(decl);
        std::vector<bool> seen(t.blocks.size(), false);
        std::vector<BlockId> stack{*decl};
        while (!stack.empty()) {
          auto b = stack.back();
          stack.pop_back();
          if (seen[b])
            continue;
          seen[b] = true;
          if (isNextOf(t.blocks[b], handle))
            continue;
          CHECK_MESSAGE(!std::holds_alternative<ir::ReturnTerm>(t.blocks[b].term.node),
                        handle << " escapes through b" << b);
          for (auto s : succ(t.blocks[b]))
            stack.push_back(s);
        }
      }
    }
  }
}

TEST_CASE("relations: fibonacci, single task and DAE visit") {
  auto fib = testing::compileCase("fib");
  auto &r = fib.relations;
  CHECK(r.at("fib").spawns == std::set<std::string>{"fib"});
  CHECK(r.at("fib").spawn_nexts == std::set<std::string>{"fib__cont0"});
  CHECK(r.at("fib").send_arguments_to == std::set<std::string>{"fib__cont0"});
  CHECK(r.at("fib__cont0").send_arguments_to == std::set<std::string>{"fib__cont0"});
  CHECK(r.at("fib").is_root);
  CHECK(!r.at("fib__cont0").is_root);

  auto single = testing::compileCase("single");
  auto &s = single.relations.at("poly");
  CHECK(s.spawns.empty());
  CHECK(s.spawn_nexts.empty());
  CHECK(s.send_arguments_to.empty());
  CHECK(s.is_root);
  CHECK(s.returns_to_host);

  auto visit = testing::compileCase("visit");
  auto &v = visit.relations;
  CHECK(v.at("visit").spawns == std::set<std::string>{"visit__access0"});
  CHECK(v.at("visit").spawn_nexts == std::set<std::string>{"visit__cont0"});
  CHECK(v.at("visit__cont0").spawns == std::set<std::string>{"visit"});
  CHECK(v.at("visit__access0").send_arguments_to == std::set<std::string>{"visit__cont0"});
}

TEST_CASE("relations match a brute-force scan of the dump") {
  for (auto &c : testing::corpus()) {
    CAPTURE(c.name);
    auto comp = testing::compileCase(c.name);
    auto scanned = testing::scanRelations(dump(comp.lowered), comp.lowered.entry);
    for (auto &[name, rel] : comp.relations) {
      CAPTURE(name);
      auto &sc = scanned.at(name);
      CHECK(rel.spawns == sc.spawns);
      CHECK(rel.spawn_nexts == sc.spawn_nexts);
      auto sends = sc.send_arguments_to;
      bool host = sends.erase("@host") > 0;
      CHECK(rel.send_arguments_to == sends);
      CHECK(rel.returns_to_host == host);
      CHECK(rel.is_root == (name == comp.lowered.entry));
    }
  }
}

TEST_CASE("explicit dumps match the golden files") {
  bool update = std::getenv("COCOON_UPDATE_GOLDEN") != nullptr;
  for (auto &c : testing::corpus()) {
    CAPTURE(c.name);
    auto comp = testing::compileCase(c.name);
    std::map<std::string, std::string> outputs = {
        {c.name + ".implicit.txt", ir::dump(comp.implicit)},
        {c.name + ".explicit.txt", dump(comp.lowered)},
    };
    if (c.has_pragma)
      outputs[c.name + ".post_dae.txt"] = ir::dump(comp.post_dae);
    for (auto &[file, text] : outputs) {
      auto path = testing::goldenDir() + "/" + file;
      if (update)
        std::ofstream(path, std::ios::binary) << text;
      CHECK_MESSAGE(testing::readText(path) == text, "golden mismatch: " << file);
    }
  }
}
