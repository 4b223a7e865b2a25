#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dsrf {

/// Planar floating-point raster, channels x height x width, values nominally in [0,1].
class Image {
 public:
  Image() = default;
  Image(int channels, int height, int width, float fill = 0.0f);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t pixels() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  float at(int c, int y, int x) const { return data_[index(c, y, x)]; }

  std::span<float> plane(int c) { return {data_.data() + c * pixels(), pixels()}; }
  std::span<const float> plane(int c) const { return {data_.data() + c * pixels(), pixels()}; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  /// Single-channel copy of channel c.
  Image channel(int c) const;
  bool same_shape(const Image& other) const {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }

  void clamp01();
  bool all_finite() const;

  friend bool operator==(const Image& a, const Image& b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  friend bool operator==(const Rect&, const Rect&) = default;
};

struct Margins {
  int top = 0;
  int bottom = 0;
  int left = 0;
  int right = 0;
};

enum class PadMode { symmetric, replicate, zero };

/// Exact sub-raster. Throws InvalidInput when rect leaves the image.
Image crop(const Image& img, const Rect& rect);

Image pad(const Image& img, const Margins& margins, PadMode mode = PadMode::symmetric);

/// Maps an out-of-range index into [0, n) using MATLAB-style symmetric reflection
/// (edge sample duplicated: -1 -> 0, n -> n-1).
int reflect_index(int i, int n);

}  // namespace dsrf
