#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dovetail {

using AsId = std::uint32_t;
using VnodeId = std::uint32_t;
using Fid = std::uint8_t;
using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// 128-bit nonce / truncated digest.
using Nonce = std::array<std::uint8_t, 16>;
/// 128-bit per-AS symmetric key k_A.
using SymKey = std::array<std::uint8_t, 16>;

inline constexpr VnodeId kNoVnode = 0xffffffffu;

// Error taxonomy. The CLI maps ConfigError to exit code 2 and
// ParseError/DataError to exit code 3.
struct ParseError : std::runtime_error {
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
  std::size_t line;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct SelectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CodecError : std::runtime_error {
  CodecError(const std::string& segment, const std::string& what)
      : std::runtime_error(segment + ": " + what), segment(segment) {}
  std::string segment;
};
struct CryptoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// splitmix64 finalizer; used to derive independent RNG streams from
/// (seed, stream index...) tuples.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a) {
  return mix64(seed ^ mix64(a + 0x632be59bd9b4e019ull));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(seed, a), b);
}

std::string to_hex(ByteView bytes);

}  // namespace dovetail
