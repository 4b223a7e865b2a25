#include "dsrf/geometry/homography.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>

#include "dsrf/core/error.hpp"

namespace dsrf::geometry {

namespace {

constexpr double kDetEps = 1e-12;
constexpr double kWEps = 1e-12;

bool collinear(const Point2& a, const Point2& b, const Point2& c, double scale2) {
  const double cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  return std::abs(cross) <= 1e-9 * scale2;
}

// Similarity taking the centroid to the origin and mean distance to sqrt(2).
Eigen::Matrix3d normalizer(std::span<const Correspondence> corr, bool use_src) {
  double cx = 0, cy = 0;
  for (const auto& c : corr) {
    const Point2& p = use_src ? c.src : c.dst;
    cx += p.x;
    cy += p.y;
  }
  cx /= corr.size();
  cy /= corr.size();
  double mean = 0;
  for (const auto& c : corr) {
    const Point2& p = use_src ? c.src : c.dst;
    mean += std::hypot(p.x - cx, p.y - cy);
  }
  mean /= corr.size();
  if (!(mean > 0)) throw EstimationFailure("homography: all points coincide");
  const double s = std::sqrt(2.0) / mean;
  Eigen::Matrix3d t;
  t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
  return t;
}

}  // namespace

Homography::Homography() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

Homography::Homography(const std::array<double, 9>& m) : m_(m) {
  for (double v : m_) {
    if (!std::isfinite(v)) throw InvalidInput("homography entries must be finite");
  }
  normalize();
}

Homography Homography::translation(double tx, double ty) { return Homography({1, 0, tx, 0, 1, ty, 0, 0, 1}); }

Homography Homography::scaling(double sx, double sy) { return Homography({sx, 0, 0, 0, sy, 0, 0, 0, 1}); }

void Homography::normalize() {
  const double s = m_[8];
  if (std::abs(s) > std::numeric_limits<double>::min() * 1e10) {
    for (double& v : m_) v /= s;
  }
}

double Homography::determinant() const {
  const auto& m = m_;
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

bool Homography::invertible() const { return std::abs(determinant()) > kDetEps; }

Point2 Homography::apply(const Point2& p) const {
  const auto& m = m_;
  const double w = m[6] * p.x + m[7] * p.y + m[8];
  if (std::abs(w) < kWEps) throw PointAtInfinity("homography maps point to infinity");
  return {(m[0] * p.x + m[1] * p.y + m[2]) / w, (m[3] * p.x + m[4] * p.y + m[5]) / w};
}

Homography Homography::inverse() const {
  const double det = determinant();
  if (!(std::abs(det) > kDetEps)) throw InvalidInput("homography is not invertible");
  const auto& m = m_;
  std::array<double, 9> r{
      (m[4] * m[8] - m[5] * m[7]) / det, (m[2] * m[7] - m[1] * m[8]) / det, (m[1] * m[5] - m[2] * m[4]) / det,
      (m[5] * m[6] - m[3] * m[8]) / det, (m[0] * m[8] - m[2] * m[6]) / det, (m[2] * m[3] - m[0] * m[5]) / det,
      (m[3] * m[7] - m[4] * m[6]) / det, (m[1] * m[6] - m[0] * m[7]) / det, (m[0] * m[4] - m[1] * m[3]) / det};
  return Homography(r);
}

Homography operator*(const Homography& a, const Homography& b) {
  std::array<double, 9> r{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (int k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
      r[i * 3 + j] = s;
    }
  }
  return Homography(r);
}

std::string Homography::to_string() const {
  std::ostringstream os;
  os.precision(17);
  for (int i = 0; i < 9; ++i) os << (i ? " " : "") << m_[i];
  return os.str();
}

Point2 apply_homography(const Homography& h, const Point2& p) { return h.apply(p); }

Homography estimate_homography_dlt(std::span<const Correspondence> corr) {
  const std::size_t n = corr.size();
  if (n < 4) throw EstimationFailure("homography needs at least 4 correspondences");

  const Eigen::Matrix3d ts = normalizer(corr, true);
  const Eigen::Matrix3d td = normalizer(corr, false);
  if (n == 4) {
    // Any collinear triple in either set makes the minimal problem degenerate.
    for (int side = 0; side < 2; ++side) {
      Point2 p[4];
      for (int i = 0; i < 4; ++i) {
        const Point2& q = side == 0 ? corr[i].src : corr[i].dst;
        const Eigen::Matrix3d& t = side == 0 ? ts : td;
        p[i] = {t(0, 0) * q.x + t(0, 2), t(1, 1) * q.y + t(1, 2)};
      }
      for (int a = 0; a < 4; ++a) {
        for (int b = a + 1; b < 4; ++b) {
          for (int c = b + 1; c < 4; ++c) {
            if (collinear(p[a], p[b], p[c], 1.0)) throw EstimationFailure("homography: collinear points");
          }
        }
      }
    }
  }

  Eigen::MatrixXd a(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = ts(0, 0) * corr[i].src.x + ts(0, 2);
    const double y = ts(1, 1) * corr[i].src.y + ts(1, 2);
    const double u = td(0, 0) * corr[i].dst.x + td(0, 2);
    const double v = td(1, 1) * corr[i].dst.y + td(1, 2);
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::VectorXd hvec;
  Eigen::VectorXd sv;
  if (n == 4) {
    // 8x9: pad to square so the full right singular basis is available.
    Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(9, 9);
    sq.topRows(8) = a;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sq, Eigen::ComputeFullV);
    hvec = svd.matrixV().col(8);
    sv = svd.singularValues();
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    hvec = svd.matrixV().col(8);
    sv = svd.singularValues();
  }
  // A second (near-)null direction means the solution is not unique.
  if (!(sv(7) > 1e-10 * sv(0))) throw EstimationFailure("homography: rank-deficient configuration");

  Eigen::Matrix3d hn;
  hn << hvec(0), hvec(1), hvec(2), hvec(3), hvec(4), hvec(5), hvec(6), hvec(7), hvec(8);
  const Eigen::Matrix3d h = td.inverse() * hn * ts;
  std::array<double, 9> m{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m[r * 3 + c] = h(r, c);
  }
  for (double v : m) {
    if (!std::isfinite(v)) throw EstimationFailure("homography: non-finite solution");
  }
  const double scale = h.cwiseAbs().maxCoeff();
  for (double& v : m) v /= scale;
  Homography out(m);
  if (!out.invertible()) throw EstimationFailure("homography: singular solution");
  return out;
}

double symmetric_transfer_error(const Homography& h, const Homography& h_inv, const Correspondence& c) {
  try {
    const Point2 f = h.apply(c.src);
    const Point2 b = h_inv.apply(c.dst);
    const double df = (f.x - c.dst.x) * (f.x - c.dst.x) + (f.y - c.dst.y) * (f.y - c.dst.y);
    const double db = (b.x - c.src.x) * (b.x - c.src.x) + (b.y - c.src.y) * (b.y - c.src.y);
    return std::sqrt(df + db);
  } catch (const PointAtInfinity&) {
    return std::numeric_limits<double>::infinity();
  }
}

double max_transfer_difference(const Homography& a, const Homography& b, std::span<const Point2> pts) {
  double worst = 0;
  for (const auto& p : pts) {
    const Point2 pa = a.apply(p);
    const Point2 pb = b.apply(p);
    worst = std::max(worst, std::hypot(pa.x - pb.x, pa.y - pb.y));
  }
  return worst;
}

}  // namespace dsrf::geometry
