#include "corpus.hpp"

#include "cocoon/driver/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace cocoon;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cocoon");
  std::vector<const char *> argv;
  for (auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = driver::runCli(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string corpusFile(const std::string &name) { return testing::corpusDir() + "/" + name + ".mc"; }

std::filesystem::path scratch(const std::string &name) {
  auto dir = std::filesystem::temp_directory_path() / ("cocoon_cli_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

size_t lines(const std::string &s, const std::string &needle) {
  size_t n = 0;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);)
    n += l.find(needle) != std::string::npos;
  return n;
}

} // namespace

TEST_CASE("run prints the result and versioned stats") {
  auto r = cli({"run", corpusFile("fib"), "--mode", "parallel", "--workers", "4", "10"});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["result"] == 55);
  CHECK(j["stats"]["version"] == std::string(driver::kStatsVersion));
  CHECK(j["stats"]["mode"] == "parallel");
  CHECK(j["stats"].contains("steals"));

  auto zero = cli({"run", corpusFile("fib"), "--mode", "oracle", "0"});
  REQUIRE(zero.code == 0);
  CHECK(nlohmann::json::parse(zero.out)["result"] == 0);

  auto sim = cli({"run", corpusFile("fib"), "--mode", "simulate", "12"});
  REQUIRE(sim.code == 0);
  auto s = nlohmann::json::parse(sim.out);
  CHECK(s["result"] == 144);
  CHECK(s["stats"]["makespan"].get<int64_t>() > 0);
}

TEST_CASE("exit codes") {
  auto bad = cli({"compile", testing::corpusDir() + "/bad/unresolved_spawn.mc"});
  CHECK(bad.code == driver::kDiagnostics);
  CHECK(lines(bad.err, "error:") == 1);

  auto arity = cli({"run", corpusFile("fib"), "1", "2"});
  CHECK(arity.code == driver::kRuntimeError);
  CHECK(!arity.err.empty());

  auto missing = cli({"run", "/nonexistent/prog.mc", "1"});
  CHECK(missing.code != 0);

  auto usage = cli({"run"});
  CHECK(usage.code != 0);

  auto div = scratch("div");
  std::ofstream(div / "d.mc") << "task i64 f(i64 a) { return 1 / a; }\n";
  auto trap = cli({"run", (div / "d.mc").string(), "0"});
  CHECK(trap.code == driver::kRuntimeError);
  CHECK(trap.err.find("zero") != std::string::npos);
  std::filesystem::remove_all(div);
}

TEST_CASE("deterministic modes print identical bytes") {
  for (std::vector<std::string> mode :
       {std::vector<std::string>{"--mode", "oracle"}, {"--mode", "simulate"},
        {"--mode", "parallel", "--workers", "1"}}) {
    std::vector<std::string> args = {"run", corpusFile("two_sync")};
    args.insert(args.end(), mode.begin(), mode.end());
    args.push_back("7");
    auto a = cli(args), b = cli(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
  }
  auto a = cli({"compile", corpusFile("visit"), "--dump-ir", "explicit"});
  auto b = cli({"compile", corpusFile("visit"), "--dump-ir", "explicit"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("visit__access0") != std::string::npos);
}

TEST_CASE("dump-ir prints the requested stages in pipeline order") {
  auto r = cli({"compile", corpusFile("fib"), "--dump-ir", "explicit,ast"});
  REQUIRE(r.code == 0);
  auto ast = r.out.find("task i64 fib");
  auto lowered = r.out.find("fib__cont0");
  REQUIRE(ast != std::string::npos);
  REQUIRE(lowered != std::string::npos);
  CHECK(ast < lowered);
  auto off = cli({"compile", corpusFile("visit"), "--dae", "off", "--dump-ir", "explicit"});
  REQUIRE(off.code == 0);
  CHECK(off.out.find("__access") == std::string::npos);
}

TEST_CASE("emit writes one PE per reachable task plus the descriptor and schema") {
  auto dir = scratch("emit");
  auto r = cli({"compile", corpusFile("visit"), "--emit", "hardcilk", "--out-dir", dir.string()});
  REQUIRE(r.code == 0);
  std::set<std::string> files;
  for (auto &e : std::filesystem::directory_iterator(dir / "visit"))
    files.insert(e.path().filename().string());
  CHECK(files == std::set<std::string>{"pe_visit.cpp", "pe_visit__access0.cpp", "pe_visit__cont0.cpp",
                                       "system.json", "schema.json"});
  auto named = cli({"compile", corpusFile("fib"), "--emit", "hardcilk", "--out-dir", dir.string(),
                    "--system", "fibsys"});
  REQUIRE(named.code == 0);
  auto sys = nlohmann::json::parse(testing::readText((dir / "fibsys" / "system.json").string()));
  CHECK(sys["system"] == "fibsys");
  std::filesystem::remove_all(dir);
}

TEST_CASE("entry override") {
  auto r = cli({"run", corpusFile("two_sync"), "--entry", "sq", "9"});
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["result"] == 81);
  auto bad = cli({"run", corpusFile("two_sync"), "--entry", "nope", "9"});
  CHECK(bad.code == driver::kDiagnostics);
}

TEST_CASE("traversal over a generated tree") {
  auto dir = scratch("tree");
  auto img = (dir / "t.bin").string();
  auto g = cli({"gen-graph", "-B", "3", "-D", "4", "-o", img});
  REQUIRE(g.code == 0);
  CHECK(nlohmann::json::parse(g.out)["nodes"] == 40);
  auto r = cli({"run", corpusFile("visit"), "--mode", "parallel", "--workers", "2", "--mem-file", img,
                "--mem-out", (dir / "after.bin").string(), "--tree", "3,4"});
  REQUIRE(r.code == 0);
  auto tree = cli({"run", corpusFile("visit"), "--mode", "simulate", "--tree", "3,4"});
  REQUIRE(tree.code == 0);
  CHECK(nlohmann::json::parse(tree.out)["stats"]["tasks_executed"]["visit"] == 40);
  std::filesystem::remove_all(dir);
}

TEST_CASE("bench reports every latency") {
  auto dir = scratch("bench");
  auto csv = (dir / "b.csv").string();
  auto r = cli({"bench", "--tree", "4,5", "--latencies", "0,100", "--csv", csv});
  REQUIRE(r.code == 0);
  auto text = testing::readText(csv);
  CHECK(text.rfind("mem_latency,makespan_no_dae,makespan_dae,gap,reduction_pct\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK(lines(text, "100,") == 1);
  CHECK(r.err.find("341 nodes") != std::string::npos);
  std::filesystem::remove_all(dir);
}
