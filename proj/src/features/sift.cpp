#include "dsrf/features/sift.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dsrf/core/error.hpp"
#include "dsrf/imgcore/filter.hpp"
#include "dsrf/imgcore/resample.hpp"

namespace dsrf::features {

namespace {

constexpr int kBorder = 5;
constexpr int kMaxInterpSteps = 5;
constexpr int kOriBins = 36;
constexpr double kOriSigmaFactor = 1.5;
constexpr double kOriRadiusFactor = 3.0 * kOriSigmaFactor;
constexpr double kOriPeakRatio = 0.8;
constexpr int kDescWidth = 4;
constexpr int kDescBins = 8;
constexpr double kDescScaleFactor = 3.0;
constexpr double kDescClip = 0.2;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Plane {
  int w = 0;
  int h = 0;
  std::vector<float> v;
  float operator()(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane to_plane(const Image& img) {
  return {img.width(), img.height(), std::vector<float>(img.data().begin(), img.data().end())};
}

Image to_image(const Plane& p) {
  Image img(1, p.h, p.w);
  std::copy(p.v.begin(), p.v.end(), img.data().begin());
  return img;
}

Plane half_size(const Plane& p) {
  Plane out{p.w / 2, p.h / 2, {}};
  out.v.resize(static_cast<std::size_t>(out.w) * out.h);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      out.v[static_cast<std::size_t>(y) * out.w + x] =
          0.25f * (p(2 * y, 2 * x) + p(2 * y, 2 * x + 1) + p(2 * y + 1, 2 * x) + p(2 * y + 1, 2 * x + 1));
    }
  }
  return out;
}

Plane blur(const Plane& p, double sigma) {
  return to_plane(gaussian_blur(to_image(p), sigma));
}

struct ScaleSpace {
  int layers = 3;
  double sigma = 1.6;
  double base_factor = 1.0;  // input pixels per base pixel
  std::vector<std::vector<Plane>> gauss;
  std::vector<std::vector<Plane>> dog;

  double factor(int octave) const { return base_factor * std::ldexp(1.0, octave); }
};

void check_input(const Image& gray) {
  if (gray.channels() != 1) throw InvalidInput("feature detection expects a single-channel image");
  if (gray.height() < kMinFeatureImageSide || gray.width() < kMinFeatureImageSide) {
    throw InvalidInput("feature detection needs an image of at least 32x32 pixels");
  }
}

ScaleSpace build_scale_space(const Image& gray, const SiftParams& params) {
  ScaleSpace ss;
  ss.layers = params.octave_layers;
  ss.sigma = params.sigma;
  Plane base;
  double current_sigma = params.input_sigma;
  if (params.upsample_first_octave) {
    base = to_plane(resize_bicubic(gray, gray.height() * 2, gray.width() * 2));
    current_sigma *= 2.0;
    ss.base_factor = 0.5;
  } else {
    base = to_plane(gray);
  }
  const double diff = std::sqrt(std::max(params.sigma * params.sigma - current_sigma * current_sigma, 0.01));
  base = blur(base, diff);

  const int s = params.octave_layers;
  std::vector<double> incr(s + 3);
  incr[0] = params.sigma;
  const double k = std::pow(2.0, 1.0 / s);
  for (int i = 1; i < s + 3; ++i) {
    const double prev = params.sigma * std::pow(k, i - 1);
    const double total = prev * k;
    incr[i] = std::sqrt(total * total - prev * prev);
  }

  int n_octaves = 0;
  for (int w = base.w, h = base.h; std::min(w, h) >= params.min_octave_size; w /= 2, h /= 2) ++n_octaves;
  n_octaves = std::max(n_octaves, 1);

  ss.gauss.resize(n_octaves);
  ss.dog.resize(n_octaves);
  for (int o = 0; o < n_octaves; ++o) {
    auto& g = ss.gauss[o];
    g.resize(s + 3);
    g[0] = o == 0 ? base : half_size(ss.gauss[o - 1][s]);
    for (int i = 1; i < s + 3; ++i) g[i] = blur(g[i - 1], incr[i]);
    auto& d = ss.dog[o];
    d.resize(s + 2);
    for (int i = 0; i < s + 2; ++i) {
      d[i] = Plane{g[i].w, g[i].h, std::vector<float>(g[i].v.size())};
      for (std::size_t j = 0; j < d[i].v.size(); ++j) d[i].v[j] = g[i + 1].v[j] - g[i].v[j];
    }
  }
  return ss;
}

bool is_extremum(const std::vector<Plane>& dog, int layer, int r, int c) {
  const float val = dog[layer](r, c);
  const bool is_max = val > 0;
  for (int dl = -1; dl <= 1; ++dl) {
    const Plane& p = dog[layer + dl];
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dl == 0 && dy == 0 && dx == 0) continue;
        const float n = p(r + dy, c + dx);
        if (is_max ? n > val : n < val) return false;
      }
    }
  }
  return true;
}

// Quadratic sub-pixel/sub-scale refinement; returns false when rejected.
bool refine_extremum(const ScaleSpace& ss, int octave, int& layer, int& r, int& c, double params_contrast,
                     double edge_ratio, Keypoint& kp) {
  const auto& dog = ss.dog[octave];
  const int w = dog[0].w;
  const int h = dog[0].h;
  double xc = 0, xr = 0, xi = 0;
  double dD[3] = {0, 0, 0};
  int step = 0;
  int prev_layer = -1, prev_r = -1, prev_c = -1;
  for (; step < kMaxInterpSteps; ++step) {
    const Plane& cur = dog[layer];
    const Plane& prv = dog[layer - 1];
    const Plane& nxt = dog[layer + 1];
    dD[0] = 0.5 * (cur(r, c + 1) - cur(r, c - 1));
    dD[1] = 0.5 * (cur(r + 1, c) - cur(r - 1, c));
    dD[2] = 0.5 * (nxt(r, c) - prv(r, c));
    const double v2 = 2.0 * cur(r, c);
    const double dxx = cur(r, c + 1) + cur(r, c - 1) - v2;
    const double dyy = cur(r + 1, c) + cur(r - 1, c) - v2;
    const double dss = nxt(r, c) + prv(r, c) - v2;
    const double dxy = 0.25 * (cur(r + 1, c + 1) - cur(r + 1, c - 1) - cur(r - 1, c + 1) + cur(r - 1, c - 1));
    const double dxs = 0.25 * (nxt(r, c + 1) - nxt(r, c - 1) - prv(r, c + 1) + prv(r, c - 1));
    const double dys = 0.25 * (nxt(r + 1, c) - nxt(r - 1, c) - prv(r + 1, c) + prv(r - 1, c));
    // Solve H * X = -dD by Cramer's rule.
    const double a = dxx, b = dxy, cc = dxs, d = dyy, e = dys, f = dss;
    const double det = a * (d * f - e * e) - b * (b * f - e * cc) + cc * (b * e - d * cc);
    if (std::abs(det) < 1e-20) return false;
    const double inv00 = (d * f - e * e) / det;
    const double inv01 = -(b * f - cc * e) / det;
    const double inv02 = (b * e - cc * d) / det;
    const double inv11 = (a * f - cc * cc) / det;
    const double inv12 = -(a * e - b * cc) / det;
    const double inv22 = (a * d - b * b) / det;
    xc = -(inv00 * dD[0] + inv01 * dD[1] + inv02 * dD[2]);
    xr = -(inv01 * dD[0] + inv11 * dD[1] + inv12 * dD[2]);
    xi = -(inv02 * dD[0] + inv12 * dD[1] + inv22 * dD[2]);
    if (std::abs(xi) < 0.5 && std::abs(xr) < 0.5 && std::abs(xc) < 0.5) break;
    if (std::abs(xi) > 1e4 || std::abs(xr) > 1e4 || std::abs(xc) > 1e4) return false;
    const int next_c = c + static_cast<int>(std::lround(xc));
    const int next_r = r + static_cast<int>(std::lround(xr));
    const int next_layer = layer + static_cast<int>(std::lround(xi));
    // An extremum midway between two samples makes the update oscillate.
    if (next_c == prev_c && next_r == prev_r && next_layer == prev_layer) break;
    prev_c = c;
    prev_r = r;
    prev_layer = layer;
    c = next_c;
    r = next_r;
    layer = next_layer;
    if (layer < 1 || layer > ss.layers || c < kBorder || c >= w - kBorder || r < kBorder ||
        r >= h - kBorder) {
      return false;
    }
  }
  if (step >= kMaxInterpSteps) return false;

  const Plane& cur = dog[layer];
  const double contrast = cur(r, c) + 0.5 * (dD[0] * xc + dD[1] * xr + dD[2] * xi);
  if (std::abs(contrast) < params_contrast) return false;

  const double v2 = 2.0 * cur(r, c);
  const double dxx = cur(r, c + 1) + cur(r, c - 1) - v2;
  const double dyy = cur(r + 1, c) + cur(r - 1, c) - v2;
  const double dxy = 0.25 * (cur(r + 1, c + 1) - cur(r + 1, c - 1) - cur(r - 1, c + 1) + cur(r - 1, c - 1));
  const double tr = dxx + dyy;
  const double det = dxx * dyy - dxy * dxy;
  if (det <= 0 || tr * tr * edge_ratio >= (edge_ratio + 1) * (edge_ratio + 1) * det) return false;

  const double f = ss.factor(octave);
  kp.octave = octave;
  kp.layer = layer + xi;
  kp.x = (c + xc + 0.5) * f;
  kp.y = (r + xr + 0.5) * f;
  kp.scale = ss.sigma * std::pow(2.0, kp.layer / ss.layers) * f;
  kp.response = std::abs(contrast);
  return true;
}

int nearest_layer(const ScaleSpace& ss, double layer) {
  return std::clamp(static_cast<int>(std::lround(layer)), 0, ss.layers + 2);
}

std::vector<double> orientation_histogram(const Plane& img, int px, int py, int radius, double sigma_w) {
  std::vector<double> hist(kOriBins, 0.0);
  const double expf = -1.0 / (2.0 * sigma_w * sigma_w);
  for (int i = -radius; i <= radius; ++i) {
    const int y = py + i;
    if (y <= 0 || y >= img.h - 1) continue;
    for (int j = -radius; j <= radius; ++j) {
      const int x = px + j;
      if (x <= 0 || x >= img.w - 1) continue;
      const double dx = img(y, x + 1) - img(y, x - 1);
      const double dy = img(y + 1, x) - img(y - 1, x);
      const double w = std::exp((i * i + j * j) * expf);
      double ang = std::atan2(dy, dx);
      if (ang < 0) ang += kTwoPi;
      int bin = static_cast<int>(std::lround(ang * kOriBins / kTwoPi));
      if (bin >= kOriBins) bin -= kOriBins;
      hist[bin] += w * std::hypot(dx, dy);
    }
  }
  std::vector<double> smooth(kOriBins);
  for (int i = 0; i < kOriBins; ++i) {
    auto at = [&](int k) { return hist[(k + kOriBins) % kOriBins]; };
    smooth[i] = (at(i - 2) + at(i + 2)) * (1.0 / 16) + (at(i - 1) + at(i + 1)) * (4.0 / 16) + at(i) * (6.0 / 16);
  }
  return smooth;
}

void assign_orientations(const ScaleSpace& ss, const Keypoint& base, std::vector<Keypoint>& out) {
  const double f = ss.factor(base.octave);
  const Plane& img = ss.gauss[base.octave][nearest_layer(ss, base.layer)];
  const double scl = ss.sigma * std::pow(2.0, base.layer / ss.layers);
  const int px = static_cast<int>(std::lround(base.x / f - 0.5));
  const int py = static_cast<int>(std::lround(base.y / f - 0.5));
  const int radius = static_cast<int>(std::lround(kOriRadiusFactor * scl));
  const auto hist = orientation_histogram(img, px, py, radius, kOriSigmaFactor * scl);
  const double max_val = *std::max_element(hist.begin(), hist.end());
  if (max_val <= 0.0) return;
  for (int i = 0; i < kOriBins; ++i) {
    const double l = hist[(i - 1 + kOriBins) % kOriBins];
    const double r = hist[(i + 1) % kOriBins];
    const double v = hist[i];
    if (v > l && v > r && v >= kOriPeakRatio * max_val) {
      double bin = i + 0.5 * (l - r) / (l - 2 * v + r);
      if (bin < 0) bin += kOriBins;
      if (bin >= kOriBins) bin -= kOriBins;
      Keypoint kp = base;
      kp.orientation = kTwoPi * bin / kOriBins;
      out.push_back(kp);
    }
  }
}

bool keypoint_order(const Keypoint& a, const Keypoint& b) {
  if (a.response != b.response) return a.response > b.response;
  if (a.y != b.y) return a.y < b.y;
  if (a.x != b.x) return a.x < b.x;
  if (a.scale != b.scale) return a.scale < b.scale;
  return a.orientation < b.orientation;
}

std::vector<Keypoint> detect(const ScaleSpace& ss, const SiftParams& params) {
  std::vector<Keypoint> found;
  const int s = params.octave_layers;
  const float prefilter = static_cast<float>(0.5 * params.contrast_threshold);
  for (int o = 0; o < static_cast<int>(ss.dog.size()); ++o) {
    const auto& dog = ss.dog[o];
    const int w = dog[0].w;
    const int h = dog[0].h;
    for (int i = 1; i <= s; ++i) {
      for (int r = kBorder; r < h - kBorder; ++r) {
        for (int c = kBorder; c < w - kBorder; ++c) {
          if (std::abs(dog[i](r, c)) <= prefilter) continue;
          if (!is_extremum(dog, i, r, c)) continue;
          int layer = i, rr = r, cc = c;
          Keypoint kp;
          if (!refine_extremum(ss, o, layer, rr, cc, params.contrast_threshold, params.edge_ratio, kp)) {
            continue;
          }
          assign_orientations(ss, kp, found);
        }
      }
    }
  }
  std::sort(found.begin(), found.end(), keypoint_order);
  if (params.max_keypoints > 0 && static_cast<int>(found.size()) > params.max_keypoints) {
    found.resize(params.max_keypoints);
  }
  return found;
}

// Returns false when the descriptor window lies mostly outside the image or has no gradient.
bool describe(const ScaleSpace& ss, const Keypoint& kp, Descriptor& desc) {
  const int octave = std::clamp(kp.octave, 0, static_cast<int>(ss.gauss.size()) - 1);
  const double f = ss.factor(octave);
  const Plane& img = ss.gauss[octave][nearest_layer(ss, kp.layer)];
  const double scl = ss.sigma * std::pow(2.0, kp.layer / ss.layers);
  const int px = static_cast<int>(std::lround(kp.x / f - 0.5));
  const int py = static_cast<int>(std::lround(kp.y / f - 0.5));
  const double hist_width = kDescScaleFactor * scl;
  int radius = static_cast<int>(std::lround(hist_width * std::numbers::sqrt2 * (kDescWidth + 1) * 0.5));
  radius = std::min(radius, static_cast<int>(std::hypot(img.w, img.h)));
  const double cos_t = std::cos(kp.orientation) / hist_width;
  const double sin_t = std::sin(kp.orientation) / hist_width;
  const double bins_per_rad = kDescBins / kTwoPi;
  const double exp_scale = -1.0 / (0.5 * kDescWidth * kDescWidth);

  constexpr int kH = kDescWidth + 2;
  constexpr int kO = kDescBins + 2;
  std::vector<double> hist(kH * kH * kO, 0.0);
  std::size_t window = 0;
  std::size_t inside = 0;
  for (int i = -radius; i <= radius; ++i) {
    for (int j = -radius; j <= radius; ++j) {
      const double c_rot = j * cos_t + i * sin_t;
      const double r_rot = -j * sin_t + i * cos_t;
      const double rbin = r_rot + kDescWidth / 2.0 - 0.5;
      const double cbin = c_rot + kDescWidth / 2.0 - 0.5;
      if (!(rbin > -1 && rbin < kDescWidth && cbin > -1 && cbin < kDescWidth)) continue;
      ++window;
      const int y = py + i;
      const int x = px + j;
      if (y <= 0 || y >= img.h - 1 || x <= 0 || x >= img.w - 1) continue;
      ++inside;
      const double dx = img(y, x + 1) - img(y, x - 1);
      const double dy = img(y + 1, x) - img(y - 1, x);
      const double mag = std::hypot(dx, dy) * std::exp((c_rot * c_rot + r_rot * r_rot) * exp_scale);
      double obin = (std::atan2(dy, dx) - kp.orientation) * bins_per_rad;
      obin = std::fmod(obin, static_cast<double>(kDescBins));
      if (obin < 0) obin += kDescBins;

      const int r0 = static_cast<int>(std::floor(rbin));
      const int c0 = static_cast<int>(std::floor(cbin));
      int o0 = static_cast<int>(std::floor(obin));
      const double dr = rbin - r0;
      const double dc = cbin - c0;
      const double dorient = obin - o0;
      if (o0 >= kDescBins) o0 -= kDescBins;
      // trilinear split into (r0, r0+1) x (c0, c0+1) x (o0, o0+1); histogram offset by 1
      for (int a = 0; a < 2; ++a) {
        const double wr = a ? dr : 1.0 - dr;
        for (int b = 0; b < 2; ++b) {
          const double wc = b ? dc : 1.0 - dc;
          for (int k = 0; k < 2; ++k) {
            const double wo = k ? dorient : 1.0 - dorient;
            const int idx = ((r0 + 1 + a) * kH + (c0 + 1 + b)) * kO + (o0 + k);
            hist[idx] += mag * wr * wc * wo;
          }
        }
      }
    }
  }
  if (window == 0 || 2 * inside < window) return false;

  std::array<double, 128> raw{};
  for (int r = 0; r < kDescWidth; ++r) {
    for (int c = 0; c < kDescWidth; ++c) {
      const int base = ((r + 1) * kH + (c + 1)) * kO;
      // orientation bins wrap: bin kDescBins folds onto 0
      hist[base] += hist[base + kDescBins];
      hist[base + 1] += hist[base + kDescBins + 1];
      for (int k = 0; k < kDescBins; ++k) raw[(r * kDescWidth + c) * kDescBins + k] = hist[base + k];
    }
  }
  double norm = 0.0;
  for (double v : raw) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) return false;
  const double clip = kDescClip * norm;
  double norm2 = 0.0;
  for (double& v : raw) {
    v = std::min(v, clip);
    norm2 += v * v;
  }
  norm2 = std::sqrt(norm2);
  for (std::size_t i = 0; i < raw.size(); ++i) desc[i] = static_cast<float>(raw[i] / norm2);
  return true;
}

DescribedKeypoints describe_all(const ScaleSpace& ss, std::span<const Keypoint> keypoints) {
  DescribedKeypoints out;
  out.keypoints.reserve(keypoints.size());
  out.descriptors.reserve(keypoints.size());
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    Descriptor d{};
    if (describe(ss, keypoints[i], d)) {
      out.keypoints.push_back(keypoints[i]);
      out.descriptors.push_back(d);
    } else {
      out.skipped.push_back(i);
    }
  }
  return out;
}

// Fills octave/layer for keypoints supplied without scale-space placement.
Keypoint placed(const ScaleSpace& ss, Keypoint kp) {
  if (kp.scale <= 0.0) throw InvalidInput("keypoint scale must be positive");
  const double rel = std::log2(kp.scale / (ss.sigma * ss.base_factor));
  int octave = static_cast<int>(std::floor(rel));
  octave = std::clamp(octave, 0, static_cast<int>(ss.gauss.size()) - 1);
  kp.octave = octave;
  kp.layer = std::clamp((rel - octave) * ss.layers, 0.0, static_cast<double>(ss.layers + 2));
  return kp;
}

}  // namespace

std::vector<Keypoint> detect_keypoints(const Image& gray, const SiftParams& params) {
  check_input(gray);
  const auto ss = build_scale_space(gray, params);
  return detect(ss, params);
}

DescribedKeypoints compute_descriptors(const Image& gray, std::span<const Keypoint> keypoints,
                                       const SiftParams& params) {
  check_input(gray);
  const auto ss = build_scale_space(gray, params);
  std::vector<Keypoint> kps;
  kps.reserve(keypoints.size());
  for (const auto& kp : keypoints) {
    if (!(kp.x >= 0 && kp.x < gray.width() && kp.y >= 0 && kp.y < gray.height())) {
      throw InvalidInput("keypoint outside image bounds");
    }
    const double expected = ss.sigma * std::pow(2.0, kp.layer / ss.layers) * ss.factor(kp.octave);
    const bool consistent = kp.octave >= 0 && kp.octave < static_cast<int>(ss.gauss.size()) &&
                            std::abs(expected - kp.scale) <= 1e-6 * kp.scale;
    kps.push_back(consistent ? kp : placed(ss, kp));
  }
  return describe_all(ss, kps);
}

DescribedKeypoints detect_and_describe(const Image& gray, const SiftParams& params) {
  check_input(gray);
  const auto ss = build_scale_space(gray, params);
  const auto kps = detect(ss, params);
  return describe_all(ss, kps);
}

std::string keypoints_to_csv(std::span<const Keypoint> keypoints) {
  std::ostringstream os;
  os.precision(9);
  os << "x,y,scale,orientation,response\n";
  for (const auto& kp : keypoints) {
    os << kp.x << "," << kp.y << "," << kp.scale << "," << kp.orientation << "," << kp.response << "\n";
  }
  return os.str();
}

}  // namespace dsrf::features
