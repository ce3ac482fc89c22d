#pragma once

#include <filesystem>
#include <string>

// Fresh scratch directory under the system temp dir, emptied on each call.
inline std::filesystem::path testing_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "itm_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}
