#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cherry {

using Timestamp = std::chrono::sys_seconds;

// RFC 3339 with optional fractional seconds and numeric offset. A bare
// date ("2020-01-21") is accepted and means midnight UTC.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

std::string sha256_hex(std::string_view data);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temp file and renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::vector<std::string> split_lines(std::string_view text);
std::string_view trim(std::string_view text);
std::string to_lower_ascii(std::string_view text);
// Collapses every run of whitespace to one space and trims the ends.
std::string normalize_whitespace(std::string_view text);
std::size_t count_words(std::string_view text);

// Prefix of `text` ending right after its max_words-th whitespace token.
// Returns `text` unchanged when it has no more than max_words tokens.
std::string_view first_words(std::string_view text, std::size_t max_words);

// Fisher-Yates over a 64-bit Mersenne Twister. Unlike std::shuffle the
// output does not depend on the standard library implementation.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace cherry
