#pragma once

// Plain-text helpers shared by the file formats: 17-significant-digit
// number formatting, strict number parsing and line-numbered parse errors.

#include <charconv>
#include <cstdio>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace btainla::text {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& msg)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + msg),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline std::string format_double(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline bool parse_double(std::string_view token, double& out) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return false;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

template <class Int>
bool parse_int(std::string_view token, Int& out) {
  token = trim(token);
  if (token.empty()) return false;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

/// Splits on any run of the given delimiter characters.
inline std::vector<std::string_view> split(std::string_view s,
                                           std::string_view delims = " \t") {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto start = s.find_first_not_of(delims, pos);
    if (start == std::string_view::npos) break;
    auto stop = s.find_first_of(delims, start);
    if (stop == std::string_view::npos) stop = s.size();
    out.push_back(s.substr(start, stop - start));
    pos = stop;
  }
  return out;
}

/// Splits on every occurrence of `delim`, keeping empty fields.
inline std::vector<std::string_view> split_fields(std::string_view s, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto stop = s.find(delim, start);
    if (stop == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, stop - start));
    start = stop + 1;
  }
  return out;
}

/// Line reader that tracks 1-based line numbers for error messages.
class LineReader {
 public:
  LineReader(std::istream& in, std::string source)
      : in_(in), source_(std::move(source)) {}

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_;
    return true;
  }

  /// Next line that is not blank.
  bool next_nonblank(std::string& line) {
    while (next(line)) {
      if (!trim(line).empty()) return true;
    }
    return false;
  }

  std::size_t line() const noexcept { return line_; }
  const std::string& source() const noexcept { return source_; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(source_, line_, msg);
  }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
};

}  // namespace btainla::text
