#pragma once

#include <span>
#include <vector>

#include "airhockey/dynamics.hpp"

namespace airhockey::estimator {

using dynamics::PiecewiseModel;

/// Gaussian puck-state estimate.
struct Belief {
  Vec4 mean = Vec4::Zero();
  Mat4 cov = Mat4::Zero();
  double stamp = 0;
};

/// Position-only measurement model.
struct ObservationModel {
  Mat24 H = (Mat24() << 1, 0, 0, 0, 0, 1, 0, 0).finished();
  Mat2 R = (0.005 * 0.005) * Mat2::Identity();
};

/// Default prior: position pinned near the first observation, velocity wide.
Belief initial_belief(const Vec2& z, double stamp);

/// EKF time update through the piecewise model. The Jacobian comes from the
/// model's linearization at the belief mean, so contact-frame sensitivity is
/// part of the covariance propagation.
Belief ekf_predict(const Belief& belief, const std::optional<Vec4>& s_m,
                   const PiecewiseModel& model);

/// Joseph-form measurement update. Throws on a singular innovation covariance.
Belief ekf_update(const Belief& belief, const Vec2& z, const ObservationModel& obs);

/// K repeated predictions; returns K+1 beliefs including the initial one.
/// An empty mallet plan rolls the puck through free/wall modes only.
std::vector<Belief> rollout_belief(const Belief& belief, std::span<const Vec4> mallet_plan,
                                   int k_steps, const PiecewiseModel& model);

/// Draws from N(0, cov); tolerates rank-deficient covariances.
Vec4 sample_gaussian(Rng& rng, const Mat4& cov);

}  // namespace airhockey::estimator
