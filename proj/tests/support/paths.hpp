#pragma once

#include <fstream>
#include <sstream>
#include <string>

namespace kirett::testing {

inline std::string source_path(const std::string& relative) { return std::string(KIRETT_SOURCE_DIR) + "/" + relative; }
inline std::string corpus_path() { return source_path("corpus/kirett_sample.json"); }
inline std::string fixture_path(const std::string& name) { return source_path("tests/fixtures/" + name); }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace kirett::testing
