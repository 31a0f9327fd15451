#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "gbim/netdata.hpp"

namespace gbim::test {

// Scratch file under the build tree's temp directory, removed on destruction.
class TempFile {
 public:
  TempFile(const std::string& name, const std::string& contents)
      : path_(std::filesystem::temp_directory_path() / ("gbim-test-" + name)) {
    std::ofstream(path_) << contents;
  }
  ~TempFile() { std::filesystem::remove(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("gbim-test-" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// 3 users, 2 items: 0->1 (0.5), 0->2 (0.4), 1->2 (0.6); items 0-1 adjacent.
inline Dataset tiny_dataset() {
  SocialGraph social(3, {{0, 1, 0.5}, {0, 2, 0.4}, {1, 2, 0.6}});
  ItemGraph items(2, {{0, 1}});
  PreferenceMatrix prefs(3, 2, {0.2, 0.6, 0.5, 0.4, 0.9, 0.3});
  return {std::move(social), std::move(items), std::move(prefs)};
}

}  // namespace gbim::test
