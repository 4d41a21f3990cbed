#pragma once
// Router geometry: the isosceles main triangle lies in the xz plane with the
// quantization axis B || z; the auxiliary atoms sit on the +/-y axis.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace spinroute {

using Vec3 = Eigen::Vector3d;

// Relative orientation of an ordered atom pair with respect to B || z.
struct PairAngles {
  double r = 0.0;          // separation, um
  double cos_theta = 0.0;  // polar angle of (to - from) against z
  double sin_theta = 0.0;  // >= 0
  double phi = 0.0;        // azimuth in the xy plane, atan2(y, x)
};

inline PairAngles pair_angles(const Vec3& from, const Vec3& to) {
  const Vec3 rv = to - from;
  PairAngles g;
  g.r = rv.norm();
  if (g.r <= 0.0)
    throw std::invalid_argument("pair_angles: coincident atom positions");
  g.cos_theta = rv.z() / g.r;
  g.sin_theta = std::sqrt(std::max(0.0, 1.0 - g.cos_theta * g.cos_theta));
  g.phi = std::atan2(rv.y(), rv.x());
  return g;
}

// Five-atom router layout. Sites 1..3 form the main triangle: base atoms
// 2 = (-a/2, 0, 0) and 3 = (+a/2, 0, 0), apex 1 = (0, 0, h) with
// h = sqrt(c^2 - a^2/4). The auxiliary atoms are 4 = (0, +y, 0) and
// 5 = (0, -y, 0) with y = sqrt(b^2 - a^2/4), each at distance b from both
// base atoms and perpendicular to the triangle plane.
struct RouterGeometry {
  double a_um = 0.0;  // base length |r_23|
  double b_um = 0.0;  // aux distance to each base atom
  double c_um = 0.0;  // apex distance |r_12| = |r_13|

  RouterGeometry(double a, double b, double c) : a_um(a), b_um(b), c_um(c) {
    if (!(a > 0.0))
      throw std::invalid_argument("geometry: base length a_um must be > 0");
    if (!(b > 0.5 * a))
      throw std::invalid_argument(
          "geometry: aux distance b_um must exceed a_um/2 (got b_um = " +
          std::to_string(b) + ", a_um/2 = " + std::to_string(0.5 * a) + ")");
    if (!(c > 0.5 * a))
      throw std::invalid_argument(
          "geometry: apex distance c_um must exceed a_um/2 (got c_um = " +
          std::to_string(c) + ", a_um/2 = " + std::to_string(0.5 * a) + ")");
  }

  double apex_height() const {
    return std::sqrt(c_um * c_um - 0.25 * a_um * a_um);
  }
  double aux_offset() const {
    return std::sqrt(b_um * b_um - 0.25 * a_um * a_um);
  }

  // Position of site 1..5 (1..3 triangle, 4/5 auxiliary).
  Vec3 position(int site) const {
    switch (site) {
      case 1: return {0.0, 0.0, apex_height()};
      case 2: return {-0.5 * a_um, 0.0, 0.0};
      case 3: return {+0.5 * a_um, 0.0, 0.0};
      case 4: return {0.0, +aux_offset(), 0.0};
      case 5: return {0.0, -aux_offset(), 0.0};
      default:
        throw std::invalid_argument("geometry: site index must be 1..5");
    }
  }

  PairAngles angles(int site_from, int site_to) const {
    return pair_angles(position(site_from), position(site_to));
  }
};

}  // namespace spinroute
