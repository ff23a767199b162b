#include "cocoon/runtime/memory.hpp"

#include <bit>
#include <fstream>

namespace cocoon::runtime {

namespace {
std::atomic<uint64_t> g_violations{0};
} // namespace

SafetyViolation::SafetyViolation(const std::string &what) : RuntimeError(what) {
  g_violations.fetch_add(1, std::memory_order_relaxed);
}

uint64_t safetyViolationCount() { return g_violations.load(std::memory_order_relaxed); }

void resetSafetyViolations() { g_violations.store(0, std::memory_order_relaxed); }

static_assert(std::endian::native == std::endian::little,
              "memory images are read with host byte order");

Memory Memory::loadImage(const std::filesystem::path &path, size_t minWords) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw RuntimeError("cannot open memory image `" + path.string() + "`");
  in.seekg(0, std::ios::end);
  auto bytes = size_t(in.tellg());
  if (bytes % 8 != 0)
    throw RuntimeError("memory image `" + path.string() + "` is not a whole number of words");
  in.seekg(0);
  std::vector<int64_t> words(std::max(bytes / 8, minWords), 0);
  in.read(reinterpret_cast<char *>(words.data()), std::streamsize(bytes));
  if (!in)
    throw RuntimeError("failed reading memory image `" + path.string() + "`");
  return Memory(std::move(words));
}

void Memory::saveImage(const std::filesystem::path &path) const {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char *>(words_.data()), std::streamsize(words_.size() * 8));
  if (!out)
    throw RuntimeError("failed writing memory image `" + path.string() + "`");
}

} // namespace cocoon::runtime
