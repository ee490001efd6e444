#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "riskassess/case_io.hpp"

namespace fixture {

inline std::string path(const std::string& name) { return std::string(RISKASSESS_TEST_DATA) + "/" + name; }
inline std::string repo_path(const std::string& name) { return std::string(RISKASSESS_REPO_DATA) + "/" + name; }

inline std::shared_ptr<const riskassess::Network> load(const std::string& name) {
  return std::make_shared<const riskassess::Network>(riskassess::load_case(path(name)));
}

inline std::shared_ptr<const riskassess::Network> ieee39() {
  return std::make_shared<const riskassess::Network>(riskassess::load_case(repo_path("ieee39.case")));
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("riskassess_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture
