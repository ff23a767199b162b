#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace cocoon::runtime {

/// A failure of the program being run (bad address, division by zero, step
/// limit) or a broken scheduling invariant detected while running it.
class RuntimeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A broken join invariant: a placeholder written twice, a counter
/// underflow, or a closure released with results outstanding. Every
/// construction is counted process-wide.
class SafetyViolation : public RuntimeError {
public:
  explicit SafetyViolation(const std::string &what);
};

uint64_t safetyViolationCount();
void resetSafetyViolations();

/// Flat word-addressed memory. Every access is bounds-checked. Loads and
/// stores may race between workers; they are relaxed atomics so the races
/// are defined, and exchange is a true read-modify-write.
class Memory {
public:
  Memory() = default;
  explicit Memory(size_t words) : words_(words, 0) {}
  explicit Memory(std::vector<int64_t> words) : words_(std::move(words)) {}

  size_t size() const { return words_.size(); }
  const std::vector<int64_t> &words() const { return words_; }
  std::vector<int64_t> &words() { return words_; }

  int64_t load(int64_t addr) const {
    return std::atomic_ref<const int64_t>(words_[check(addr)]).load(std::memory_order_relaxed);
  }
  void store(int64_t addr, int64_t value) {
    std::atomic_ref<int64_t>(words_[check(addr)]).store(value, std::memory_order_relaxed);
  }
  int64_t exchange(int64_t addr, int64_t value) {
    return std::atomic_ref<int64_t>(words_[check(addr)]).exchange(value, std::memory_order_acq_rel);
  }

  bool operator==(const Memory &o) const { return words_ == o.words_; }

  /// Raw little-endian 64-bit words. A file shorter than `minWords` is
  /// zero-extended.
  static Memory loadImage(const std::filesystem::path &path, size_t minWords = 0);
  void saveImage(const std::filesystem::path &path) const;

private:
  std::vector<int64_t> words_;

  size_t check(int64_t addr) const {
    if (addr < 0 || uint64_t(addr) >= words_.size())
      throw RuntimeError("memory access out of bounds at address " + std::to_string(addr) +
                         " (memory has " + std::to_string(words_.size()) + " words)");
    return size_t(addr);
  }
};

} // namespace cocoon::runtime
