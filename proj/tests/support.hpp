#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "lowlight/image.hpp"

namespace testing_support {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("lowlight-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
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
  std::filesystem::path path_;
};

template <class T = float>
lowlight::BasicImage<T> random_image(int w, int h, int c, unsigned seed, double lo = 0.0, double hi = 1.0) {
  lowlight::BasicImage<T> img(w, h, c);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& v : img.storage()) v = static_cast<T>(d(rng));
  return img;
}

template <class T = float>
lowlight::BasicImage<T> rgb_image(int w, int h, double r, double g, double b) {
  lowlight::BasicImage<T> img(w, h, 3);
  for (auto& v : img.plane(0)) v = static_cast<T>(r);
  for (auto& v : img.plane(1)) v = static_cast<T>(g);
  for (auto& v : img.plane(2)) v = static_cast<T>(b);
  return img;
}

}  // namespace testing_support
