#pragma once

// Planar raster container shared by every stage of the pipeline.

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lowlight {

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// H x W x C raster stored channel-planar (all of channel 0, then channel 1, ...).
/// Images hold samples in [0,1]; operations that produce images clamp on write.
/// The same container also carries signed maps (see EnhanceMap) where the
/// [0,1] convention does not apply.
template <class T>
class BasicImage {
 public:
  using value_type = T;

  BasicImage() = default;
  BasicImage(int width, int height, int channels, T fill = T{0})
      : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || channels < 0) {
      throw InvalidInput("image dimensions must be non-negative");
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t plane_size() const { return static_cast<std::size_t>(width_) * height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  const T& at(int c, int y, int x) const { return data_[index(c, y, x)]; }

  std::span<T> plane(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const T> plane(int c) const { return {data_.data() + c * plane_size(), plane_size()}; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  bool same_shape(const BasicImage& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  template <class U>
  BasicImage<U> cast() const {
    BasicImage<U> out(width_, height_, channels_);
    std::transform(data_.begin(), data_.end(), out.storage().begin(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  void clamp01() {
    for (auto& v : data_) v = std::clamp(v, T{0}, T{1});
  }

  friend bool operator==(const BasicImage& a, const BasicImage& b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

using Image = BasicImage<float>;

inline void require_channels(int actual, int expected, const char* what) {
  if (actual != expected) {
    throw InvalidInput(std::string(what) + ": expected " + std::to_string(expected) +
                       " channels, got " + std::to_string(actual));
  }
}

template <class T>
void require_same_shape(const BasicImage<T>& a, const BasicImage<T>& b, const std::string& what) {
  if (!a.same_shape(b)) {
    throw InvalidInput(what + ": shape mismatch (" + std::to_string(a.width()) + "x" +
                       std::to_string(a.height()) + "x" + std::to_string(a.channels()) + " vs " +
                       std::to_string(b.width()) + "x" + std::to_string(b.height()) + "x" +
                       std::to_string(b.channels()) + ")");
  }
}

template <class T>
BasicImage<T> crop(const BasicImage<T>& img, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || w < 0 || h < 0 || x0 + w > img.width() || y0 + h > img.height()) {
    throw InvalidInput("crop window outside image");
  }
  BasicImage<T> out(w, h, img.channels());
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < h; ++y)
      std::copy_n(&img.at(c, y0 + y, x0), w, &out.at(c, y, 0));
  return out;
}

/// Extracts one channel as a single-channel image.
template <class T>
BasicImage<T> extract_channel(const BasicImage<T>& img, int c) {
  BasicImage<T> out(img.width(), img.height(), 1);
  std::copy(img.plane(c).begin(), img.plane(c).end(), out.storage().begin());
  return out;
}

template <class T>
void insert_channel(BasicImage<T>& img, int c, const BasicImage<T>& channel) {
  if (channel.width() != img.width() || channel.height() != img.height() || channel.channels() != 1) {
    throw InvalidInput("insert_channel: shape mismatch");
  }
  std::copy(channel.storage().begin(), channel.storage().end(), img.plane(c).begin());
}

template <class T>
double mean(const BasicImage<T>& img) {
  if (img.empty()) return 0.0;
  double s = 0.0;
  for (T v : img.storage()) s += static_cast<double>(v);
  return s / static_cast<double>(img.size());
}

/// Rotates by 90 degrees counter-clockwise.
template <class T>
BasicImage<T> rotate90(const BasicImage<T>& img) {
  BasicImage<T> out(img.height(), img.width(), img.channels());
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) out.at(c, img.width() - 1 - x, y) = img.at(c, y, x);
  return out;
}

}  // namespace lowlight
