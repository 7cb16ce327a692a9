#pragma once

#include <optional>

#include "airhockey/arm.hpp"
#include "airhockey/estimator.hpp"

namespace airhockey::shooting {

using dynamics::PiecewiseModel;
using estimator::Belief;

/// Cost coefficients of the shooting objective: goal probability traded
/// against expected puck speed at the goal line, with a penalty on
/// low-probability trajectories.
struct ShotWeights {
  double w_goal = 1.0;
  double w_vel = 0.1;  // s/m
  double w_penalty = 10.0;
  double p_min = 0.2;
};

/// Contact-speed model: constant cap by default, optionally limited by the
/// arm's velocity polytope at the contact position.
struct SpeedCap {
  double constant = 2.0;
  const arm::ArmModel* arm_model = nullptr;

  double at(const Vec2& pos) const {
    return arm_model ? std::min(constant, arm::velocity_cap(pos, *arm_model)) : constant;
  }
};

/// Mallet center position realizing the contact constraint for angle `a`
/// (a = 0 hits toward +x). Empty when the pose leaves the mallet's range.
std::optional<Vec2> contact_pose_from_angle(const Vec2& puck_pos, double a,
                                            const sim::SimParams& params);

struct ShotEval {
  double cost = std::numeric_limits<double>::infinity();
  double p_goal = 0;
  double expected_vx = 0;
  bool feasible = false;
};

/// Applies the mallet-contact mode once at k=0, rolls the belief through
/// free/wall modes, and scores the goal-line crossing of the mean.
ShotEval shot_cost(double a, const Belief& belief_at_contact, const sim::SimParams& params,
                   const PiecewiseModel& model, const ShotWeights& weights, int horizon,
                   const SpeedCap& cap);

struct ShotPlan {
  double angle = 0;
  sim::MalletState contact_mallet_state;
  double contact_time = 0;
  double p_goal = 0;
  double cost = 0;
};

struct SolveOptions {
  int grid_n = 64;
  double angle_lo = -M_PI / 2;
  double angle_hi = M_PI / 2;
  double contact_delay = 0.5;  // preset time until contact [s]
  int horizon = 150;           // rollout cap, ceil(3 s / dt)
  SpeedCap cap{};
};

/// Grid search plus two bisection refinement passes over the feasible arc,
/// on the belief propagated to the preset contact time. Ties break toward
/// smaller |a|. Mirror-symmetric by construction: the belief is solved in a
/// y >= 0 canonical frame and the angle is reflected back.
std::optional<ShotPlan> solve_shot(const Belief& belief, const sim::SimParams& params,
                                   const PiecewiseModel& model, const ShotWeights& weights,
                                   const SolveOptions& opts = {});

/// Probability mass of N(mu, sigma^2) inside (-half_width, half_width),
/// evaluated on |mu| so mirrored means give bit-identical results.
double gaussian_interval_mass(double mu, double sigma, double half_width);

}  // namespace airhockey::shooting
