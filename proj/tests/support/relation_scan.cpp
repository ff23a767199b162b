#include "relation_scan.hpp"

#include <regex>
#include <sstream>
#include <vector>

namespace cocoon::testing {

std::map<std::string, ScannedRelations> scanRelations(const std::string &dump,
                                                      const std::string &entry) {
  static const std::regex taskRe(R"(^task (\w+)\()");
  static const std::regex closureRe(R"(^\s+closure (\w+): (\w+) )");
  static const std::regex spawnRe(R"(^\s+spawn (\w+)\(.*\) -> (\^parent|(\w+)\.[@#]\w+)$)");
  static const std::regex nextRe(R"(^\s+T: spawn_next (\w+)$)");

  struct Edge {
    std::string from, to;
  };
  std::map<std::string, ScannedRelations> out;
  std::vector<Edge> sendsInto;     // callee `to` delivers into continuation `from`
  std::vector<Edge> inheritsFrom;  // task `to` inherits the destinations of `from`

  std::istringstream in(dump);
  std::string line, task;
  std::map<std::string, std::string> handles;
  std::smatch m;
  while (std::getline(in, line)) {
    if (std::regex_search(line, m, taskRe)) {
      task = m[1];
      handles.clear();
      out[task];
    } else if (std::regex_search(line, m, closureRe)) {
      handles[m[1]] = m[2];
    } else if (std::regex_match(line, m, spawnRe)) {
      std::string callee = m[1];
      out[task].spawns.insert(callee);
      if (m[2] == "^parent")
        inheritsFrom.push_back({task, callee});
      else
        sendsInto.push_back({handles.at(m[3]), callee});
    } else if (std::regex_match(line, m, nextRe)) {
      std::string cont = handles.at(m[1]);
      out[task].spawn_nexts.insert(cont);
      inheritsFrom.push_back({task, cont});
    }
  }

  out[entry].send_arguments_to.insert("@host");
  for (auto &e : sendsInto)
    out[e.to].send_arguments_to.insert(e.from);
  for (bool changed = true; changed;) {
    changed = false;
    for (auto &e : inheritsFrom)
      for (auto &d : std::set<std::string>(out[e.from].send_arguments_to))
        changed |= out[e.to].send_arguments_to.insert(d).second;
  }
  return out;
}

} // namespace cocoon::testing
