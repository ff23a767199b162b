#pragma once

#include "cocoon/cps/explicit.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cocoon::hardcilk {

struct StructField {
  std::string name;
  uint32_t offset_bytes = 0;
  uint32_t size_bytes = 0;
};

/// A task's input record: return destination first, then 64-bit fields,
/// then `_pad` up to the next power of two (at least 128 bits).
struct StructLayout {
  std::string name;
  std::vector<StructField> fields; // includes `_pad` when present
  uint32_t payload_bits = 0;
  uint32_t total_bits = 0;
};

StructLayout computeClosureStruct(const cps::ClosureLayout &layout, std::string name);

/// The record a task's PE reads: its closure for a continuation, otherwise
/// an argument record laid out by the same rule.
StructLayout inputStruct(const cps::ExplicitProgram &program, const cps::ExplicitTask &task);

struct EmittedPe {
  std::string task;
  std::string file_name; // pe_<task>.cpp
  std::string source;
  StructLayout input;
};

/// One processing element in HLS-style C++. Stream ports follow the task's
/// relations: spawn_<callee>, spawnNext_<cont>, sendArg_<cont>, plus
/// taskIn, closureIn when closures are allocated, hostOut when the result
/// can reach the host, and the `mem` master port.
EmittedPe emitPe(const cps::ExplicitProgram &program, const cps::SystemRelations &relations,
                 const std::string &task);

struct TaskEntry {
  std::string name;
  uint32_t closure_size_bits = 0;
  bool is_root = false;
  std::vector<std::string> spawns;
  std::vector<std::string> spawn_nexts;
  std::vector<std::string> send_arguments_to;

  bool operator==(const TaskEntry &) const = default;
};

inline constexpr std::string_view kDescriptorVersion = "cocoon-system/1";

struct SystemDescriptor {
  std::string version{kDescriptorVersion};
  std::string system;
  std::string entry;
  std::vector<TaskEntry> tasks;

  bool operator==(const SystemDescriptor &) const = default;
};

/// Tasks reachable from the entry, in program order, relation sets sorted.
SystemDescriptor describeSystem(const cps::ExplicitProgram &program,
                                const cps::SystemRelations &relations, std::string system);

/// Canonical text: sorted keys, two-space indent, LF, trailing newline.
std::string toJson(const SystemDescriptor &d);
/// Throws std::invalid_argument on malformed input.
SystemDescriptor fromJson(std::string_view text);

/// The JSON Schema (draft-07) the descriptor conforms to.
std::string schemaJson();

/// Validates `document` against `schema`. Supports the keywords the bundled
/// schema uses: type, properties, required, additionalProperties, items,
/// enum, const, pattern, minItems, uniqueItems and local $ref. Returns one
/// message per violation.
std::vector<std::string> validateJson(std::string_view document, std::string_view schema);

/// Consistency beyond the schema: unique names, exactly one root that is the
/// entry, every referenced task present, sizes a power of two >= 128.
std::vector<std::string> checkDescriptor(const SystemDescriptor &d);

/// Writes pe_<task>.cpp for every reachable task, system.json and
/// schema.json into `dir` and returns the written paths.
std::vector<std::filesystem::path> writeSystem(const cps::ExplicitProgram &program,
                                               const cps::SystemRelations &relations,
                                               const std::string &system,
                                               const std::filesystem::path &dir);

} // namespace cocoon::hardcilk
