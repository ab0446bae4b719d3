#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace grand {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent generator streams from a
// base seed so that per-entity / per-thread results do not depend on
// scheduling.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// Hex SHA-256 of a file's contents. Throws IoError if unreadable.
std::string sha256_file(const std::filesystem::path& path);

/// Shortest round-trip decimal form of a double.
std::string format_real(double value);

/// Parses a full token as a double; throws FormatError on trailing junk.
double parse_real(std::string_view token);

std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

}  // namespace grand
