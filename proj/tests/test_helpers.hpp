#pragma once

#include "airhockey/dynamics.hpp"
#include "airhockey/estimator.hpp"

namespace airhockey::testutil {

inline const sim::SimParams& default_params() {
  static const sim::SimParams params{};
  return params;
}

/// Model identified once from simulator data and shared across suites.
inline const dynamics::PiecewiseModel& learned_model() {
  static const dynamics::PiecewiseModel model = [] {
    const auto& params = default_params();
    const auto data = dynamics::collect_transitions(400, {}, params, 0.02, 2027);
    return dynamics::fit_piecewise(data, params.geom, 0.02);
  }();
  return model;
}

/// Synthetic single-mode model with prescribed free dynamics.
inline dynamics::PiecewiseModel synthetic_model(const Mat4& A, const Mat4& Sigma,
                                                double dt = 0.02) {
  dynamics::LinearMode free{A, Mat4::Zero(), Sigma};
  return dynamics::PiecewiseModel(free, free, free, dt, default_params().geom);
}

/// Ground-truth goal frequency for a planned contact: samples the initial
/// puck state from the belief, executes the contact in the simulator with
/// the mallet placed from the belief mean, and counts scored goals.
inline double mc_goal_frequency(const estimator::Belief& belief, double angle, double speed,
                                int n_rollouts, std::uint64_t seed,
                                const sim::SimParams& params) {
  Rng rng = make_rng(seed);
  const Vec2 dir = dir_from_angle(angle);
  const Vec2 pose =
      belief.mean.head<2>() - params.geom.contact_distance() * Vec2(dir[0], dir[1]);
  const Vec2 v_m = speed * dir;
  int goals = 0;
  for (int i = 0; i < n_rollouts; ++i) {
    const Vec4 s0 = belief.mean + estimator::sample_gaussian(rng, belief.cov);
    sim::WorldState w;
    w.puck = sim::PuckState::from_vec(s0);
    w.mallet = {pose[0], pose[1], v_m[0], v_m[1]};
    for (int k = 0; k < 150 && !w.scored; ++k) {
      w = sim::step(w, sim::MalletCommand{v_m}, 0.02, params);
    }
    if (w.scored && *w.scored == sim::GoalSide::Theirs) ++goals;
  }
  return static_cast<double>(goals) / n_rollouts;
}

}  // namespace airhockey::testutil
