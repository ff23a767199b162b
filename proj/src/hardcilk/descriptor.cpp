#include "cocoon/hardcilk/backend.hpp"

#include <json.hpp>

#include <fstream>
#include <regex>
#include <set>

namespace cocoon::hardcilk {

using json = nlohmann::json;
using namespace cocoon::cps;

SystemDescriptor describeSystem(const ExplicitProgram &program, const SystemRelations &relations,
                                std::string system) {
  SystemDescriptor d;
  d.system = std::move(system);
  d.entry = program.entry;
  for (auto &name : reachableTasks(program)) {
    auto *t = program.find(name);
    auto &r = relations.at(name);
    TaskEntry e;
    e.name = name;
    e.closure_size_bits = inputStruct(program, *t).total_bits;
    e.is_root = r.is_root;
    e.spawns.assign(r.spawns.begin(), r.spawns.end());
    e.spawn_nexts.assign(r.spawn_nexts.begin(), r.spawn_nexts.end());
    e.send_arguments_to.assign(r.send_arguments_to.begin(), r.send_arguments_to.end());
    d.tasks.push_back(std::move(e));
  }
  return d;
}

std::string toJson(const SystemDescriptor &d) {
  json tasks = json::array();
  for (auto &t : d.tasks)
    tasks.push_back(json{{"name", t.name},
                         {"closure_size_bits", t.closure_size_bits},
                         {"is_root", t.is_root},
                         {"spawns", t.spawns},
                         {"spawn_nexts", t.spawn_nexts},
                         {"send_arguments_to", t.send_arguments_to}});
  json doc{{"version", d.version}, {"system", d.system}, {"entry", d.entry}, {"tasks", tasks}};
  return doc.dump(2) + "\n";
}

SystemDescriptor fromJson(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception &e) {
    throw std::invalid_argument(std::string("descriptor is not JSON: ") + e.what());
  }
  auto errors = validateJson(text, schemaJson());
  if (!errors.empty())
    throw std::invalid_argument("descriptor violates schema: " + errors.front());
  SystemDescriptor d;
  d.version = doc.at("version").get<std::string>();
  d.system = doc.at("system").get<std::string>();
  d.entry = doc.at("entry").get<std::string>();
  for (auto &t : doc.at("tasks")) {
    TaskEntry e;
    e.name = t.at("name").get<std::string>();
    e.closure_size_bits = t.at("closure_size_bits").get<uint32_t>();
    e.is_root = t.at("is_root").get<bool>();
    e.spawns = t.at("spawns").get<std::vector<std::string>>();
    e.spawn_nexts = t.at("spawn_nexts").get<std::vector<std::string>>();
    e.send_arguments_to = t.at("send_arguments_to").get<std::vector<std::string>>();
    d.tasks.push_back(std::move(e));
  }
  return d;
}

std::string schemaJson() {
  json names = {{"type", "array"},
                {"items", {{"$ref", "#/definitions/name"}}},
                {"uniqueItems", true}};
  json sizes = json::array();
  for (uint32_t s = 128; s <= 65536; s *= 2)
    sizes.push_back(s);
  json task = {
      {"type", "object"},
      {"required",
       {"name", "closure_size_bits", "is_root", "spawns", "spawn_nexts", "send_arguments_to"}},
      {"additionalProperties", false},
      {"properties",
       {{"name", {{"$ref", "#/definitions/name"}}},
        {"closure_size_bits", {{"type", "integer"}, {"enum", sizes}}},
        {"is_root", {{"type", "boolean"}}},
        {"spawns", names},
        {"spawn_nexts", names},
        {"send_arguments_to", names}}}};
  json schema = {
      {"$schema", "http://json-schema.org/draft-07/schema#"},
      {"title", "cocoon HardCilk system descriptor"},
      {"type", "object"},
      {"required", {"version", "system", "entry", "tasks"}},
      {"additionalProperties", false},
      {"definitions",
       {{"name", {{"type", "string"}, {"pattern", "^[A-Za-z_][A-Za-z0-9_]*$"}}},
        {"task", task}}},
      {"properties",
       {{"version", {{"const", std::string(kDescriptorVersion)}}},
        {"system", {{"$ref", "#/definitions/name"}}},
        {"entry", {{"$ref", "#/definitions/name"}}},
        {"tasks",
         {{"type", "array"}, {"minItems", 1}, {"items", {{"$ref", "#/definitions/task"}}}}}}}};
  return schema.dump(2) + "\n";
}

namespace {

class Validator {
public:
  explicit Validator(const json &root) : root_(root) {}

  void check(const json &v, const json &s, const std::string &path) {
    if (s.contains("$ref")) {
      check(v, resolve(s["$ref"].get<std::string>()), path);
      return;
    }
    if (s.contains("type") && !hasType(v, s["type"].get<std::string>())) {
      fail(path, "expected " + s["type"].get<std::string>());
      return;
    }
    if (s.contains("const") && v != s["const"])
      fail(path, "must equal " + s["const"].dump());
    if (s.contains("enum")) {
      bool found = false;
      for (auto &e : s["enum"])
        found |= e == v;
      if (!found)
        fail(path, "not one of " + s["enum"].dump());
    }
    if (s.contains("pattern") && v.is_string() &&
        !std::regex_search(v.get<std::string>(), std::regex(s["pattern"].get<std::string>())))
      fail(path, "does not match " + s["pattern"].get<std::string>());
    if (v.is_object()) {
      if (s.contains("required"))
        for (auto &r : s["required"])
          if (!v.contains(r.get<std::string>()))
            fail(path, "missing property `" + r.get<std::string>() + "`");
      const json *props = s.contains("properties") ? &s["properties"] : nullptr;
      for (auto &[k, sub] : v.items()) {
        if (props && props->contains(k))
          check(sub, (*props)[k], path + "/" + k);
        else if (s.contains("additionalProperties") && s["additionalProperties"] == false)
          fail(path, "unexpected property `" + k + "`");
      }
    }
    if (v.is_array()) {
      if (s.contains("minItems") && v.size() < s["minItems"].get<size_t>())
        fail(path, "fewer than " + s["minItems"].dump() + " items");
      if (s.contains("uniqueItems") && s["uniqueItems"] == true) {
        std::set<std::string> seen;
        for (auto &e : v)
          if (!seen.insert(e.dump()).second)
            fail(path, "duplicate item " + e.dump());
      }
      if (s.contains("items"))
        for (size_t i = 0; i < v.size(); ++i)
          check(v[i], s["items"], path + "/" + std::to_string(i));
    }
  }

  std::vector<std::string> errors;

private:
  const json &root_;

  void fail(const std::string &path, const std::string &msg) {
    errors.push_back((path.empty() ? "/" : path) + ": " + msg);
  }

  const json &resolve(const std::string &ref) {
    if (ref.rfind("#/", 0) != 0)
      throw std::invalid_argument("only local $ref is supported: " + ref);
    return root_.at(json::json_pointer(ref.substr(1)));
  }

  static bool hasType(const json &v, const std::string &t) {
    if (t == "object")
      return v.is_object();
    if (t == "array")
      return v.is_array();
    if (t == "string")
      return v.is_string();
    if (t == "boolean")
      return v.is_boolean();
    if (t == "integer")
      return v.is_number_integer();
    if (t == "number")
      return v.is_number();
    if (t == "null")
      return v.is_null();
    throw std::invalid_argument("unsupported schema type " + t);
  }
};

} // namespace

std::vector<std::string> validateJson(std::string_view document, std::string_view schema) {
  json doc, s;
  try {
    doc = json::parse(document);
  } catch (const json::exception &e) {
    return {std::string("document is not JSON: ") + e.what()};
  }
  s = json::parse(schema);
  Validator v(s);
  v.check(doc, s, "");
  return v.errors;
}

std::vector<std::string> checkDescriptor(const SystemDescriptor &d) {
  std::vector<std::string> out;
  std::set<std::string> names;
  for (auto &t : d.tasks)
    if (!names.insert(t.name).second)
      out.push_back("task `" + t.name + "` is listed twice");
  int roots = 0;
  for (auto &t : d.tasks) {
    if (t.is_root) {
      ++roots;
      if (t.name != d.entry)
        out.push_back("root task `" + t.name + "` is not the entry `" + d.entry + "`");
    }
    if (t.closure_size_bits < 128 || (t.closure_size_bits & (t.closure_size_bits - 1)))
      out.push_back("task `" + t.name + "` has closure size " +
                    std::to_string(t.closure_size_bits) + ", not a power of two >= 128");
    for (auto *set : {&t.spawns, &t.spawn_nexts, &t.send_arguments_to})
      for (auto &r : *set)
        if (!names.count(r))
          out.push_back("task `" + t.name + "` refers to unknown task `" + r + "`");
  }
  if (roots != 1)
    out.push_back("expected exactly one root task, found " + std::to_string(roots));
  if (!names.count(d.entry))
    out.push_back("entry `" + d.entry + "` is not a listed task");
  return out;
}

std::vector<std::filesystem::path> writeSystem(const ExplicitProgram &program,
                                               const SystemRelations &relations,
                                               const std::string &system,
                                               const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::filesystem::path &p, const std::string &text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
    if (!f)
      throw std::runtime_error("cannot write " + p.string());
    written.push_back(p);
  };
  for (auto &name : reachableTasks(program)) {
    auto pe = emitPe(program, relations, name);
    put(dir / pe.file_name, pe.source);
  }
  auto d = describeSystem(program, relations, system);
  auto problems = checkDescriptor(d);
  if (!problems.empty())
    throw InternalError("inconsistent system descriptor: " + problems.front());
  put(dir / "system.json", toJson(d));
  put(dir / "schema.json", schemaJson());
  return written;
}

} // namespace cocoon::hardcilk
