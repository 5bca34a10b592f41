#include "cherry/util.hpp"

#include <openssl/evp.h>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cherry/error.hpp"

namespace cherry {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kIntegrity: return "integrity";
    case ErrorCode::kDanglingReference: return "dangling_reference";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kProvider: return "provider";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kContextUnavailable: return "context_unavailable";
    case ErrorCode::kScorer: return "scorer";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kConvergence: return "convergence";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kUnauthorized: return "unauthorized";
    case ErrorCode::kPrerequisite: return "prerequisite";
  }
  return "unknown";
}

namespace {

int parse_digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) {
    throw InvalidArgumentError("timestamp too short: '" + std::string(text) + "'");
  }
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
      throw InvalidArgumentError("malformed timestamp: '" + std::string(text) + "'");
    }
    value = value * 10 + (text[i] - '0');
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw InvalidArgumentError("malformed timestamp: '" + std::string(text) + "'");
  }
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  text = trim(text);
  const int y = parse_digits(text, 0, 4);
  expect_char(text, 4, '-');
  const int mo = parse_digits(text, 5, 2);
  expect_char(text, 7, '-');
  const int d = parse_digits(text, 8, 2);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) {
    throw InvalidArgumentError("invalid calendar date: '" + std::string(text) + "'");
  }
  Timestamp ts{sys_days{ymd}};
  if (text.size() == 10) {
    return ts;
  }
  if (text[10] != 'T' && text[10] != 't' && text[10] != ' ') {
    throw InvalidArgumentError("malformed timestamp: '" + std::string(text) + "'");
  }
  const int hh = parse_digits(text, 11, 2);
  expect_char(text, 13, ':');
  const int mm = parse_digits(text, 14, 2);
  expect_char(text, 16, ':');
  const int ss = parse_digits(text, 17, 2);
  if (hh > 23 || mm > 59 || ss > 60) {
    throw InvalidArgumentError("time out of range: '" + std::string(text) + "'");
  }
  ts += hours{hh} + minutes{mm} + seconds{ss};
  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      ++pos;
    }
  }
  if (pos >= text.size()) {
    throw InvalidArgumentError("timestamp lacks a UTC offset: '" + std::string(text) + "'");
  }
  if (text[pos] == 'Z' || text[pos] == 'z') {
    if (pos + 1 != text.size()) {
      throw InvalidArgumentError("trailing characters in timestamp: '" + std::string(text) + "'");
    }
    return ts;
  }
  if (text[pos] != '+' && text[pos] != '-') {
    throw InvalidArgumentError("malformed UTC offset: '" + std::string(text) + "'");
  }
  const int sign = text[pos] == '+' ? 1 : -1;
  const int oh = parse_digits(text, pos + 1, 2);
  expect_char(text, pos + 3, ':');
  const int om = parse_digits(text, pos + 4, 2);
  if (pos + 6 != text.size()) {
    throw InvalidArgumentError("trailing characters in timestamp: '" + std::string(text) + "'");
  }
  return ts - sign * (hours{oh} + minutes{om});
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto days = floor<std::chrono::days>(ts);
  const year_month_day ymd{days};
  const hh_mm_ss<seconds> tod{ts - days};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot write " + path.string());
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
      throw IoError("short write to " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError("cannot replace " + path.string() + ": " + ec.message());
  }
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = end + 1;
  }
  return lines;
}

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
}  // namespace

std::string_view trim(std::string_view text) {
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return text;
}

std::string to_lower_ascii(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::size_t count_words(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

std::string_view first_words(std::string_view text, std::size_t max_words) {
  std::size_t seen = 0;
  bool in_word = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (is_space(text[i])) {
      if (in_word && seen == max_words) return text.substr(0, i);
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++seen;
      if (seen > max_words) return trim(text.substr(0, i));
    }
  }
  return text;
}

}  // namespace cherry
