#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bmdsr {

// Error taxonomy mapped onto CLI exit codes: UsageError -> 1, DataError -> 2,
// anything else -> 3.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FNV-1a, used for seed-stream derivation and artifact hashes.
inline std::uint64_t fnv1a64(const void* bytes, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  return fnv1a64(s.data(), s.size());
}

std::string hex64(std::uint64_t v);

// Reads a whole file into memory. Throws DataError if unreadable.
std::string read_file(const std::filesystem::path& path);

// Writes bytes through a temp file in the same directory, then renames.
// The destination never holds partial content.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace bmdsr
