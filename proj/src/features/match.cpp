#include "dsrf/features/match.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "dsrf/core/error.hpp"

namespace dsrf::features {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, 128, Eigen::RowMajor>;

RowMat pack(std::span<const Descriptor> d) {
  RowMat m(static_cast<Eigen::Index>(d.size()), 128);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (int k = 0; k < 128; ++k) m(static_cast<Eigen::Index>(i), k) = d[i][k];
  }
  return m;
}

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
constexpr Eigen::Index kBlock = 512;

}  // namespace

double descriptor_distance(const Descriptor& a, const Descriptor& b) {
  double s = 0.0;
  for (int k = 0; k < 128; ++k) {
    const double d = static_cast<double>(a[k]) - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<Match> match_descriptors(std::span<const Descriptor> src, std::span<const Descriptor> dst,
                                     double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidInput("match ratio must lie in (0, 1)");
  if (src.empty() || dst.empty()) return {};

  const RowMat a = pack(src);
  const RowMat b = pack(dst);
  const Eigen::VectorXf an = a.rowwise().squaredNorm();
  const Eigen::VectorXf bn = b.rowwise().squaredNorm();
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.rows();

  // Float GEMM shortlists candidates; decisions use exact double distances.
  std::vector<std::size_t> best1(n, kNone), best2(n, kNone);
  std::vector<float> col_best(m, std::numeric_limits<float>::infinity());
  std::vector<std::size_t> col_arg(m, kNone);
  for (Eigen::Index r0 = 0; r0 < n; r0 += kBlock) {
    const Eigen::Index rows = std::min(kBlock, n - r0);
    Eigen::MatrixXf d2 = -2.0f * (a.middleRows(r0, rows) * b.transpose());
    d2.colwise() += an.segment(r0, rows);
    d2.rowwise() += bn.transpose();
    for (Eigen::Index i = 0; i < rows; ++i) {
      float v1 = std::numeric_limits<float>::infinity(), v2 = v1;
      std::size_t i1 = kNone, i2 = kNone;
      for (Eigen::Index j = 0; j < m; ++j) {
        const float v = d2(i, j);
        if (v < v1) {
          v2 = v1;
          i2 = i1;
          v1 = v;
          i1 = static_cast<std::size_t>(j);
        } else if (v < v2) {
          v2 = v;
          i2 = static_cast<std::size_t>(j);
        }
        if (v < col_best[j]) {
          col_best[j] = v;
          col_arg[j] = static_cast<std::size_t>(r0 + i);
        }
      }
      best1[r0 + i] = i1;
      best2[r0 + i] = i2;
    }
  }

  std::vector<Match> out;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::size_t j1 = best1[i];
    std::size_t j2 = best2[i];
    double d1 = descriptor_distance(src[i], dst[j1]);
    double d2 = j2 == kNone ? std::numeric_limits<double>::infinity() : descriptor_distance(src[i], dst[j2]);
    if (d2 < d1) {
      std::swap(d1, d2);
      std::swap(j1, j2);
    }
    if (!(d1 < ratio * d2)) continue;
    if (col_arg[j1] != static_cast<std::size_t>(i)) {
      const double dc = descriptor_distance(src[col_arg[j1]], dst[j1]);
      if (dc < d1 || (dc == d1 && col_arg[j1] < static_cast<std::size_t>(i))) continue;
    }
    out.push_back({static_cast<std::size_t>(i), j1, d1});
  }
  return out;
}

}  // namespace dsrf::features
