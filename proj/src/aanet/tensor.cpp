#include "dsrf/aanet/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "dsrf/core/error.hpp"

namespace dsrf::aanet {

Tensor::Tensor(int n, int c, int h, int w, double fill) : n_(n), c_(c), h_(h), w_(w) {
  if (n < 0 || c < 0 || h < 0 || w < 0) throw InvalidInput("tensor dimensions must be non-negative");
  data_.assign(static_cast<std::size_t>(n) * c * h * w, fill);
}

std::string Tensor::shape_string() const {
  return std::to_string(n_) + "x" + std::to_string(c_) + "x" + std::to_string(h_) + "x" + std::to_string(w_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor images_to_tensor(const std::vector<Image>& images) {
  if (images.empty()) throw InvalidInput("images_to_tensor: empty list");
  const Image& f = images.front();
  Tensor t(static_cast<int>(images.size()), f.channels(), f.height(), f.width());
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i].same_shape(f)) throw InvalidInput("images_to_tensor: shapes differ");
    const auto src = images[i].data();
    std::copy(src.begin(), src.end(), t.plane(static_cast<int>(i), 0));
  }
  return t;
}

Tensor image_to_tensor(const Image& img) { return images_to_tensor({img}); }

Image tensor_to_image(const Tensor& t, int n) {
  if (n < 0 || n >= t.n()) throw InvalidInput("tensor_to_image: sample index out of range");
  Image img(t.c(), t.h(), t.w());
  const double* p = t.plane(n, 0);
  auto dst = img.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(p[i]);
  return img;
}

}  // namespace dsrf::aanet
