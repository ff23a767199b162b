#include "harness.hpp"
#include "relation_scan.hpp"

#include "cocoon/hardcilk/backend.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <regex>

using namespace cocoon;
using namespace cocoon::hardcilk;

namespace {

size_t count(const std::string &text, const std::string &needle) {
  size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1))
    ++n;
  return n;
}

std::set<std::string> ports(const std::string &source) {
  std::set<std::string> out;
  static const std::regex port(R"(#pragma HLS INTERFACE \w+ port=(\w+))");
  for (std::sregex_iterator it(source.begin(), source.end(), port), end; it != end; ++it)
    out.insert((*it)[1]);
  return out;
}

std::set<std::string> prefixed(const std::string &prefix, const std::set<std::string> &names) {
  std::set<std::string> out;
  for (auto &n : names)
    out.insert(prefix + n);
  return out;
}

bool isPow2(uint32_t v) { return v && !(v & (v - 1)); }

std::filesystem::path scratch(const std::string &name) {
  auto dir = std::filesystem::temp_directory_path() / ("cocoon_backend_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

} // namespace

TEST_CASE("fibonacci continuation record") {
  auto c = testing::compileCase("fib");
  auto &fib = *c.lowered.find("fib");
  auto s = computeClosureStruct(fib.closures.at("c0"), "fib__cont0_closure");
  REQUIRE(s.fields.size() == 4);
  CHECK(s.fields[0].name == "ret_dest");
  CHECK(s.fields[0].offset_bytes == 0);
  CHECK(s.fields[1].name == "x");
  CHECK(s.fields[1].offset_bytes == 8);
  CHECK(s.fields[2].name == "y");
  CHECK(s.fields[2].offset_bytes == 16);
  CHECK(s.fields[3].name == "_pad");
  CHECK(s.fields[3].offset_bytes == 24);
  CHECK(s.fields[3].size_bytes == 8);
  CHECK(s.payload_bits == 192);
  CHECK(s.total_bits == 256);
}

TEST_CASE("records pad only when the payload is not already a power of two") {
  cps::ClosureLayout two;
  two.continuation = "k";
  two.placeholders = {"a"};
  two.payload_bits = 128;
  two.padded_bits = cps::paddedSize(128);
  auto s = computeClosureStruct(two, "k_closure");
  CHECK(s.total_bits == 128);
  CHECK(s.fields.size() == 2);

  cps::ClosureLayout five;
  five.continuation = "k";
  five.ready_args = {"a", "b"};
  five.placeholders = {"c", "d"};
  five.payload_bits = 320;
  five.padded_bits = cps::paddedSize(320);
  auto f = computeClosureStruct(five, "k_closure");
  CHECK(f.payload_bits == 320);
  CHECK(f.total_bits == 512);
  CHECK(f.fields.back().name == "_pad");
  CHECK(f.fields.back().size_bytes == 24);
}

TEST_CASE("fibonacci PE shape") {
  auto c = testing::compileCase("fib");
  auto pe = emitPe(c.lowered, c.relations, "fib");
  CHECK(pe.file_name == "pe_fib.cpp");
  CHECK(count(pe.source, "spawn_fib.write(") == 2);
  CHECK(count(pe.source, "spawnNext_fib__cont0.write(") == 1);
  CHECK(count(pe.source, "send_result(WB_SEND_ARGUMENT") == 1);
  CHECK(ports(pe.source) == std::set<std::string>{"taskIn", "spawn_fib", "spawnNext_fib__cont0",
                                                  "sendArg_fib__cont0", "closureIn", "hostOut",
                                                  "mem"});
  auto cont = emitPe(c.lowered, c.relations, "fib__cont0");
  CHECK(cont.input.name == "fib__cont0_closure");
  CHECK(cont.input.total_bits == 256);
  CHECK(count(cont.source, ".write(msg)") == 0);
  CHECK(ports(cont.source) ==
        std::set<std::string>{"taskIn", "sendArg_fib__cont0", "hostOut", "mem"});
}

TEST_CASE("a spawn-free task has no spawn ports") {
  auto c = testing::compileCase("single");
  auto pe = emitPe(c.lowered, c.relations, "poly");
  CHECK(ports(pe.source) == std::set<std::string>{"taskIn", "hostOut", "mem"});
  CHECK(pe.source.find("closureIn.read()") == std::string::npos);
}

TEST_CASE("decoupled traversal emits three PEs") {
  auto c = testing::compileCase("visit");
  auto dir = scratch("visit");
  auto files = writeSystem(c.lowered, c.relations, "visit", dir);
  std::set<std::string> names;
  for (auto &f : files)
    names.insert(f.filename().string());
  CHECK(names == std::set<std::string>{"pe_visit.cpp", "pe_visit__access0.cpp",
                                       "pe_visit__cont0.cpp", "system.json", "schema.json"});
  auto spawner = emitPe(c.lowered, c.relations, "visit");
  CHECK(ports(spawner.source).count("spawn_visit__access0"));
  CHECK(ports(spawner.source).count("spawnNext_visit__cont0"));
  auto access = emitPe(c.lowered, c.relations, "visit__access0");
  CHECK(ports(access.source).count("sendArg_visit__cont0"));
  auto cont = emitPe(c.lowered, c.relations, "visit__cont0");
  CHECK(ports(cont.source).count("spawn_visit"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("property: PE ports follow the relations and braces balance") {
  for (auto &cc : testing::corpus()) {
    CAPTURE(cc.name);
    auto c = testing::compileCase(cc.name);
    for (auto &task : cps::reachableTasks(c.lowered)) {
      CAPTURE(task);
      auto pe = emitPe(c.lowered, c.relations, task);
      auto &rel = c.relations.at(task);
      auto p = ports(pe.source);
      std::set<std::string> want = {"taskIn", "mem"};
      for (auto &s : {prefixed("spawn_", rel.spawns), prefixed("spawnNext_", rel.spawn_nexts),
                      prefixed("sendArg_", rel.send_arguments_to)})
        want.insert(s.begin(), s.end());
      if (!rel.spawn_nexts.empty())
        want.insert("closureIn");
      if (rel.returns_to_host)
        want.insert("hostOut");
      CHECK(p == want);
      CHECK(count(pe.source, "{") == count(pe.source, "}"));
      CHECK(count(pe.source, "(") == count(pe.source, ")"));
      CHECK(pe.source.back() == '\n');
    }
  }
}

TEST_CASE("property: every record is a power of two of at least 128 bits") {
  for (auto &cc : testing::corpus()) {
    CAPTURE(cc.name);
    auto c = testing::compileCase(cc.name);
    for (auto &t : c.lowered.tasks) {
      auto s = inputStruct(c.lowered, t);
      CHECK(isPow2(s.total_bits));
      CHECK(s.total_bits >= 128);
      CHECK(s.total_bits >= s.payload_bits);
      CHECK(s.total_bits < 2 * std::max<uint32_t>(s.payload_bits, 128) + 1);
      uint32_t bytes = 0;
      for (auto &f : s.fields) {
        CHECK(f.offset_bytes == bytes);
        bytes += f.size_bytes;
      }
      CHECK(bytes * 8 == s.total_bits);
      for (auto &[name, layout] : t.closures) {
        CHECK(layout.padded_bits == computeClosureStruct(layout, name).total_bits);
        CHECK(layout.payload_bits == 64 * layout.slotCount());
      }
    }
  }
}

TEST_CASE("descriptor relation sets match a scan of the explicit dump") {
  for (auto &cc : testing::corpus()) {
    CAPTURE(cc.name);
    auto c = testing::compileCase(cc.name);
    auto d = describeSystem(c.lowered, c.relations, cc.name);
    auto scan = testing::scanRelations(cps::dump(c.lowered), d.entry);
    REQUIRE(d.tasks.size() == scan.size());
    for (auto &t : d.tasks) {
      CAPTURE(t.name);
      REQUIRE(scan.count(t.name));
      auto &s = scan.at(t.name);
      CHECK(std::set<std::string>(t.spawns.begin(), t.spawns.end()) == s.spawns);
      CHECK(std::set<std::string>(t.spawn_nexts.begin(), t.spawn_nexts.end()) == s.spawn_nexts);
      auto sends = s.send_arguments_to;
      bool host = sends.erase("@host") > 0;
      CHECK(std::set<std::string>(t.send_arguments_to.begin(), t.send_arguments_to.end()) == sends);
      CHECK(c.relations.at(t.name).returns_to_host == host);
      CHECK(t.is_root == (t.name == d.entry));
    }
  }
}

TEST_CASE("descriptor JSON round trips and validates") {
  for (auto &cc : testing::corpus()) {
    CAPTURE(cc.name);
    auto c = testing::compileCase(cc.name);
    auto d = describeSystem(c.lowered, c.relations, cc.name);
    auto text = toJson(d);
    CHECK(fromJson(text) == d);
    CHECK(toJson(fromJson(text)) == text);
    CHECK(validateJson(text, schemaJson()).empty());
    CHECK(checkDescriptor(d).empty());
    auto parsed = nlohmann::json::parse(text);
    CHECK(parsed["version"] == std::string(kDescriptorVersion));
  }
}

TEST_CASE("schema violations are reported") {
  auto c = testing::compileCase("fib");
  auto base = nlohmann::json::parse(toJson(describeSystem(c.lowered, c.relations, "fib")));
  auto schema = schemaJson();
  auto violations = [&](auto mutate) {
    auto doc = base;
    mutate(doc);
    return validateJson(doc.dump(), schema);
  };
  CHECK(!violations([](auto &d) { d["tasks"][0]["closure_size_bits"] = 192; }).empty());
  CHECK(!violations([](auto &d) { d["tasks"][0].erase("spawns"); }).empty());
  CHECK(!violations([](auto &d) { d["tasks"][0]["extra"] = 1; }).empty());
  CHECK(!violations([](auto &d) { d["version"] = "other/1"; }).empty());
  CHECK(!violations([](auto &d) { d["tasks"][0]["spawns"] = {"fib", "fib"}; }).empty());
  CHECK(!violations([](auto &d) { d["tasks"][0]["name"] = "9bad"; }).empty());
  CHECK(!violations([](auto &d) { d["tasks"] = nlohmann::json::array(); }).empty());
  CHECK(!violations([](auto &d) { d["entry"] = 3; }).empty());
  CHECK_THROWS_AS(fromJson("{\"version\": 1}"), std::invalid_argument);
  CHECK_THROWS_AS(fromJson("not json"), std::invalid_argument);
}

TEST_CASE("descriptor consistency checks") {
  auto c = testing::compileCase("fib");
  auto d = describeSystem(c.lowered, c.relations, "fib");
  auto bad = d;
  bad.tasks[1].is_root = true;
  CHECK(!checkDescriptor(bad).empty());
  bad = d;
  bad.tasks[0].spawns.push_back("ghost");
  CHECK(!checkDescriptor(bad).empty());
  bad = d;
  bad.tasks[1].name = "fib";
  CHECK(!checkDescriptor(bad).empty());
  bad = d;
  bad.tasks[0].closure_size_bits = 96;
  CHECK(!checkDescriptor(bad).empty());
}

TEST_CASE("emitted systems match the golden files") {
  bool update = std::getenv("COCOON_UPDATE_GOLDEN") != nullptr;
  for (std::string name : {"fib", "visit"}) {
    CAPTURE(name);
    auto c = testing::compileCase(name);
    auto dir = scratch("golden_" + name);
    auto golden = std::filesystem::path(testing::goldenDir()) / "hardcilk" / name;
    if (update)
      std::filesystem::create_directories(golden);
    for (auto &f : writeSystem(c.lowered, c.relations, name, dir)) {
      auto text = testing::readText(f.string());
      auto path = golden / f.filename();
      if (update)
        std::ofstream(path, std::ios::binary) << text;
      CHECK_MESSAGE(testing::readText(path.string()) == text, "golden mismatch: " << path);
    }
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("emitted PEs compile against the stream stub") {
  for (auto &cc : testing::corpus()) {
    CAPTURE(cc.name);
    auto c = testing::compileCase(cc.name);
    auto dir = scratch("syntax_" + cc.name);
    for (auto &f : writeSystem(c.lowered, c.relations, cc.name, dir)) {
      if (f.extension() != ".cpp")
        continue;
      std::string cmd = std::string(COCOON_CXX) +
                        " -std=c++17 -fsyntax-only -Wall -Wextra -Werror -Wno-unknown-pragmas -I" +
                        COCOON_HLS_STUB_DIR + " " + f.string() + " 2>&1";
      CAPTURE(cmd);
      CHECK(std::system(cmd.c_str()) == 0);
    }
    std::filesystem::remove_all(dir);
  }
}
