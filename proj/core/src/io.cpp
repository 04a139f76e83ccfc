#include "fdaclust/io.hpp"

#include <fstream>
#include <sstream>

#include "fdaclust/error.hpp"

namespace fdaclust {

const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::io: return "io";
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::schema: return "schema";
    case ErrorCategory::domain: return "domain";
    case ErrorCategory::config: return "config";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::data: return "data";
  }
  return "unknown";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::io, "cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::io, "cannot write file: " + path.string());
  out << content;
  if (!out) fail(ErrorCategory::io, "write failed: " + path.string());
}

}  // namespace fdaclust
