#pragma once

// Scaffolding shared by the test suites: curve builders, a scratch-directory
// guard, and a small XML well-formedness scanner for the SVG outputs.

#include <cctype>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "fdaclust/curve.hpp"
#include "fdaclust/error.hpp"

namespace testutil {

/// True when fn throws an Error of exactly the expected category.
inline bool fails_with(fdaclust::ErrorCategory expected, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const fdaclust::Error& e) {
    return e.category() == expected;
  }
  return false;
}

inline fdaclust::SampledCurve constant_curve(const std::string& id, double value, int n = 11) {
  std::vector<double> times, values;
  for (int i = 0; i < n; ++i) {
    times.push_back(static_cast<double>(i) / (n - 1));
    values.push_back(value);
  }
  return {id, std::move(times), std::move(values)};
}

inline fdaclust::SampledCurve curve_of(const std::string& id,
                                       const std::function<double(double)>& f, int n = 101) {
  std::vector<double> times, values;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    times.push_back(t);
    values.push_back(f(t));
  }
  return {id, std::move(times), std::move(values)};
}

/// Creates a unique scratch directory and removes it on destruction.
class TempDir {
 public:
  TempDir() {
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("fdaclust-test-" + std::to_string(static_cast<std::uint64_t>(stamp)) + "-" +
             std::to_string(counter()++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

inline std::size_t count_substr(const std::string& text, const std::string& needle) {
  std::size_t count = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1))
    ++count;
  return count;
}

/// Minimal XML well-formedness scan: tags balance, attribute quotes close,
/// comments and the prolog are skipped. Good enough to catch malformed SVG.
inline bool xml_well_formed(const std::string& text) {
  std::vector<std::string> stack;
  bool seen_element = false;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (text[i] != '<') {
      ++i;
      continue;
    }
    if (text.compare(i, 4, "<!--") == 0) {
      const auto end = text.find("-->", i + 4);
      if (end == std::string::npos) return false;
      i = end + 3;
      continue;
    }
    if (text.compare(i, 2, "<?") == 0) {
      const auto end = text.find("?>", i + 2);
      if (end == std::string::npos) return false;
      i = end + 2;
      continue;
    }
    const bool closing = i + 1 < n && text[i + 1] == '/';
    std::size_t p = i + (closing ? 2 : 1);
    const std::size_t name_start = p;
    while (p < n && (std::isalnum(static_cast<unsigned char>(text[p])) || text[p] == '_' ||
                     text[p] == '-' || text[p] == ':'))
      ++p;
    const std::string name = text.substr(name_start, p - name_start);
    if (name.empty()) return false;
    char quote = 0;
    while (p < n) {
      const char c = text[p];
      if (quote != 0) {
        if (c == quote) quote = 0;
      } else if (c == '"' || c == '\'') {
        quote = c;
      } else if (c == '>') {
        break;
      }
      ++p;
    }
    if (p >= n || quote != 0) return false;
    const bool self_closing = !closing && text[p - 1] == '/';
    if (closing) {
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
    } else if (!self_closing) {
      stack.push_back(name);
    }
    seen_element = true;
    i = p + 1;
  }
  return seen_element && stack.empty();
}

inline bool valid_svg(const std::string& text, std::size_t min_paths = 1) {
  return xml_well_formed(text) && count_substr(text, "<svg") == 1 &&
         count_substr(text, "<path") >= min_paths;
}

}  // namespace testutil
