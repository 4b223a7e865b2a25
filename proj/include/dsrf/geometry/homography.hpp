#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

namespace dsrf::geometry {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Correspondence {
  Point2 src;
  Point2 dst;
};

/// 3x3 projective transform, row-major. Kept normalized so h(2,2) = 1 whenever that
/// entry is nonzero.
class Homography {
 public:
  Homography();  // identity
  explicit Homography(const std::array<double, 9>& m);

  static Homography identity() { return Homography(); }
  static Homography translation(double tx, double ty);
  static Homography scaling(double sx, double sy);
  static Homography scaling(double s) { return scaling(s, s); }

  double operator()(int r, int c) const { return m_[r * 3 + c]; }
  const std::array<double, 9>& matrix() const { return m_; }

  double determinant() const;
  bool invertible() const;

  /// Throws PointAtInfinity when the mapped w is (nearly) zero.
  Point2 apply(const Point2& p) const;
  /// Throws InvalidInput if not invertible.
  Homography inverse() const;

  /// (a * b) applies b first, then a.
  friend Homography operator*(const Homography& a, const Homography& b);

  std::string to_string() const;

 private:
  void normalize();
  std::array<double, 9> m_;
};

Point2 apply_homography(const Homography& h, const Point2& p);

/// Hartley-normalized DLT. Needs >= 4 correspondences; throws EstimationFailure for
/// degenerate configurations (collinear minimal sets, rank deficiency).
Homography estimate_homography_dlt(std::span<const Correspondence> corr);

/// Symmetric transfer error sqrt(|H s - d|^2 + |H^-1 d - s|^2); infinity if a point
/// maps to infinity.
double symmetric_transfer_error(const Homography& h, const Homography& h_inv, const Correspondence& c);

/// Largest |a(p) - b(p)| over the given points.
double max_transfer_difference(const Homography& a, const Homography& b, std::span<const Point2> pts);

}  // namespace dsrf::geometry
