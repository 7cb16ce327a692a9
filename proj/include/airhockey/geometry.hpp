#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace airhockey {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Mat24 = Eigen::Matrix<double, 2, 4>;

/// Table frame: origin at table center, +x toward the opponent goal.
/// The agent's mallet lives in the x < 0 half.
struct TableGeometry {
  double length = 1.948;                   // x extent [m]
  double width = 1.038;                    // y extent [m]
  double goal_width = 0.25;                // goal mouth opening [m]
  double puck_radius = 0.03165;            // [m]
  double mallet_radius = 0.04815;          // [m]
  double wall_restitution = 0.9;           // normal restitution, (0,1]
  double wall_tangential_retention = 0.95; // tangential retention, (0,1]
  double mallet_restitution = 0.9;         // (0,1]
  double damping_coeff = 0.1;              // exponential velocity decay [1/s]

  double half_length() const { return 0.5 * length; }
  double half_width() const { return 0.5 * width; }
  /// Center distance at puck-mallet contact.
  double contact_distance() const { return puck_radius + mallet_radius; }

  /// Throws std::invalid_argument if any invariant is violated.
  void validate() const;
};

void to_json(nlohmann::json& j, const TableGeometry& g);
void from_json(const nlohmann::json& j, TableGeometry& g);

/// Unit vector for an angle, computed so that mirroring the angle mirrors
/// the y component bit-exactly (sin is evaluated on |a|).
inline Vec2 dir_from_angle(double a) {
  const double aa = std::abs(a);
  return {std::cos(aa), std::copysign(std::sin(aa), a)};
}

}  // namespace airhockey
