#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "zmlloco/dynamics/momentum.hpp"

namespace zmlloco {

class DegenerateDenominator : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateZml : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

inline constexpr double kSupportEpsilon = 1e-6;
inline constexpr double kContactThreshold = 1.0;  // N
inline constexpr double kZmpScale = 0.05;         // m
inline constexpr double kAngularMomentumScale = 5.0;

// Horizontal ZMP on the plane at height z, from the centroidal Newton-Euler
// rates. Throws DegenerateDenominator when |Mg + dP_z| <= 1e-6 Mg.
template <typename Scalar>
Vector2<Scalar> zmp_at_height(Scalar mass, const Vector3<Scalar>& com,
                              const Vector3<Scalar>& dP,
                              const Vector3<Scalar>& dL, Scalar z,
                              Scalar g = Scalar(kGravity)) {
  const Scalar mg = mass * g;
  const Scalar den = mg + dP.z();
  if (!(std::abs(den) > Scalar(1e-6) * mg))
    throw DegenerateDenominator("ZMP denominator vanishes (free fall)");
  // Same quotient, written as an offset from the CoM projection.
  return Vector2<Scalar>(com.x() + (z * dP.x() - dL.y() - com.x() * dP.z()) / den,
                         com.y() + (z * dP.y() + dL.x() - com.y() * dP.z()) / den);
}

template <typename Scalar>
struct ZmlLine {
  Vector3<Scalar> anchor = Vector3<Scalar>::Zero();  // ZMP at z = 0
  Vector3<Scalar> direction = Vector3<Scalar>::UnitZ();
  bool degenerate = false;

  // Point on the line at height z.
  Vector3<Scalar> at_height(Scalar z) const {
    return anchor + direction * (z / direction.z());
  }
};

// The ZMP is affine in z, so two heights fix the line.
template <typename Scalar>
ZmlLine<Scalar> compute_zml(Scalar mass, const Vector3<Scalar>& com,
                            const Vector3<Scalar>& dP, const Vector3<Scalar>& dL,
                            Scalar g = Scalar(kGravity)) {
  ZmlLine<Scalar> line;
  try {
    const Vector2<Scalar> p0 = zmp_at_height<Scalar>(mass, com, dP, dL, Scalar(0), g);
    const Vector2<Scalar> p1 = zmp_at_height<Scalar>(mass, com, dP, dL, Scalar(1), g);
    line.anchor << p0, Scalar(0);
    line.direction << p1 - p0, Scalar(1);
    line.direction.normalize();
  } catch (const DegenerateDenominator&) {
    line.degenerate = true;
  }
  return line;
}

inline ZmlLine<double> compute_zml(const MomentumState& m) {
  return compute_zml<double>(m.mass, m.com, m.linear_rate, m.angular_rate);
}

template <typename Scalar>
struct SupportCenter {
  Vector3<Scalar> point = Vector3<Scalar>::Zero();
  int contact_count = 0;
  Scalar epsilon = Scalar(kSupportEpsilon);
};

// Contact-weighted center of the two sole centers; c = 1[|f| > threshold].
template <typename Scalar>
SupportCenter<Scalar> support_center(const Vector3<Scalar>& left,
                                     const Vector3<Scalar>& right,
                                     const Vector3<Scalar>& left_force,
                                     const Vector3<Scalar>& right_force,
                                     Scalar epsilon = Scalar(kSupportEpsilon),
                                     Scalar threshold = Scalar(0)) {
  if (!(epsilon > Scalar(0))) throw std::invalid_argument("epsilon must be positive");
  const Scalar cl = left_force.norm() > threshold ? Scalar(1) : Scalar(0);
  const Scalar cr = right_force.norm() > threshold ? Scalar(1) : Scalar(0);
  SupportCenter<Scalar> s;
  s.point = (left * (cl + epsilon) + right * (cr + epsilon)) / (cl + cr + Scalar(2) * epsilon);
  s.contact_count = static_cast<int>(cl + cr);
  s.epsilon = epsilon;
  return s;
}

// Horizontal distance from the support center to the ZML dropped onto the
// ground plane: a point when the line is vertical, a 2-D line otherwise.
template <typename Scalar>
Scalar zmp_distance(const SupportCenter<Scalar>& csp, const ZmlLine<Scalar>& zml) {
  if (zml.degenerate) throw DegenerateZml("ZML is degenerate");
  const Vector2<Scalar> p = csp.point.template head<2>() - zml.anchor.template head<2>();
  const Vector2<Scalar> d = zml.direction.template head<2>();
  const Scalar dn = d.norm();
  if (dn <= Scalar(1e-12)) return p.norm();
  const Vector2<Scalar> u = d / dn;
  return std::abs(u.x() * p.y() - u.y() * p.x());
}

template <typename Scalar>
Scalar reward_zmp(Scalar distance) {
  return std::exp(-distance / Scalar(kZmpScale));
}

template <typename Scalar>
Scalar reward_angular_momentum(const Vector3<Scalar>& angular_base) {
  return std::exp(-angular_base.norm() / Scalar(kAngularMomentumScale));
}

// ZMP-distance and reward for one instant. Without support or with a
// degenerate line the sample is invalid and its reward is zero.
struct BalanceSample {
  SupportCenter<double> support;
  ZmlLine<double> zml;
  bool valid = false;
  double distance = std::numeric_limits<double>::quiet_NaN();
  double reward = 0.0;
};

inline BalanceSample evaluate_balance(const MomentumState& m, const Vec3& left_sole,
                                      const Vec3& right_sole, const Vec3& left_force,
                                      const Vec3& right_force,
                                      double threshold = kContactThreshold,
                                      double epsilon = kSupportEpsilon) {
  BalanceSample s;
  s.support = support_center<double>(left_sole, right_sole, left_force, right_force, epsilon,
                                     threshold);
  s.zml = compute_zml(m);
  if (s.support.contact_count == 0 || s.zml.degenerate) return s;
  s.valid = true;
  s.distance = zmp_distance(s.support, s.zml);
  s.reward = reward_zmp(s.distance);
  return s;
}

}  // namespace zmlloco
