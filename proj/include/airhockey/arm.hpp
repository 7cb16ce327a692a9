#pragma once

#include <optional>
#include <vector>

#include "airhockey/sim.hpp"

namespace airhockey::arm {

using Vec3 = Eigen::Vector3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;

/// Planar 3R arm reaching over the agent half from behind the goal.
struct ArmModel {
  Vec2 base{-1.2, 0};
  Vec3 lengths{0.55, 0.45, 0.35};
  Vec3 q_min{-2.6, -2.6, -2.6};
  Vec3 q_max{2.6, 2.6, 2.6};
  Vec3 qd_max{3.0, 3.0, 3.0};
  Vec3 q_ref{0, 0, 0};
  double lambda = 0.01;  // posture regularization weight

  /// Default arm with q_ref picked as the highest-manipulability posture
  /// reaching the home position.
  static const ArmModel& planar_default();
};

struct JointState {
  Vec3 q = Vec3::Zero();
  Vec3 qd = Vec3::Zero();
};

Vec2 fk(const Vec3& q, const ArmModel& arm);
Mat23 jacobian(const Vec3& q, const ArmModel& arm);

/// All joint solutions with the mallet at `target`, enumerated over a wrist
/// direction grid and both elbow branches, filtered by position limits.
std::vector<Vec3> ik_solutions(const Vec2& target, const ArmModel& arm, int wrist_grid = 64);

/// Largest speed achievable in EVERY direction at `pos` (inscribed radius of
/// the velocity polytope J * [-qd_max, qd_max]), maximized over IK branches.
/// Returns 0 when the position is unreachable.
double velocity_cap(const Vec2& pos, const ArmModel& arm);

/// One constrained tracking step: minimizes ||J(q) qd - v_cmd||^2 +
/// lambda ||q + qd dt - q_ref||^2 over the joint velocity box (velocity
/// limits intersected with position limits reached in one step). Solved
/// exactly by enumerating the 27 active sets and picking the KKT-consistent
/// minimizer.
JointState qp_track(const JointState& state, const sim::MalletCommand& cmd,
                    const ArmModel& arm, double dt);

/// Norm of the gradient projected onto the feasible directions at qd; the
/// optimality certificate for qp_track.
double kkt_residual(const JointState& state, const Vec3& qd_lo, const Vec3& qd_hi,
                    const sim::MalletCommand& cmd, const ArmModel& arm, double dt);

/// The velocity box used by qp_track for the given state.
void velocity_box(const JointState& state, const ArmModel& arm, double dt, Vec3& lo, Vec3& hi);

}  // namespace airhockey::arm
