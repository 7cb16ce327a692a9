#include "airhockey/estimator.hpp"

#include <stdexcept>

namespace airhockey::estimator {

namespace {

Mat4 symmetrized(const Mat4& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

Belief initial_belief(const Vec2& z, double stamp) {
  Belief b;
  b.mean << z, 0, 0;
  b.cov = Vec4{1e-4, 1e-4, 0.25, 0.25}.asDiagonal();
  b.stamp = stamp;
  return b;
}

Belief ekf_predict(const Belief& belief, const std::optional<Vec4>& s_m,
                   const PiecewiseModel& model) {
  Belief out;
  out.mean = model.predict_mean(belief.mean, s_m);
  const Mat4 A = model.linearize(belief.mean, s_m);
  out.cov = symmetrized(A * belief.cov * A.transpose() + model.noise_at(belief.mean, s_m));
  out.stamp = belief.stamp + model.dt();
  if (!out.mean.allFinite() || !out.cov.allFinite()) {
    throw std::runtime_error("ekf_predict: non-finite propagation");
  }
  return out;
}

Belief ekf_update(const Belief& belief, const Vec2& z, const ObservationModel& obs) {
  const Mat2 S = obs.H * belief.cov * obs.H.transpose() + obs.R;
  const double det = S.determinant();
  if (!(std::abs(det) > 1e-300) || !S.allFinite()) {
    throw std::runtime_error("ekf_update: singular innovation covariance");
  }
  const Eigen::Matrix<double, 4, 2> K = belief.cov * obs.H.transpose() * S.inverse();
  const Mat4 IKH = Mat4::Identity() - K * obs.H;

  Belief out;
  out.mean = belief.mean + K * (z - obs.H * belief.mean);
  out.cov = symmetrized(IKH * belief.cov * IKH.transpose() + K * obs.R * K.transpose());
  out.stamp = belief.stamp;
  if (!out.mean.allFinite() || !out.cov.allFinite()) {
    throw std::runtime_error("ekf_update: non-finite update");
  }
  return out;
}

std::vector<Belief> rollout_belief(const Belief& belief, std::span<const Vec4> mallet_plan,
                                   int k_steps, const PiecewiseModel& model) {
  if (k_steps < 1) throw std::invalid_argument("rollout_belief: k_steps must be >= 1");
  if (!mallet_plan.empty() && static_cast<int>(mallet_plan.size()) < k_steps) {
    throw std::invalid_argument("rollout_belief: mallet plan shorter than the horizon");
  }
  std::vector<Belief> out;
  out.reserve(k_steps + 1);
  out.push_back(belief);
  for (int k = 0; k < k_steps; ++k) {
    const std::optional<Vec4> s_m =
        mallet_plan.empty() ? std::nullopt : std::optional<Vec4>(mallet_plan[k]);
    out.push_back(ekf_predict(out.back(), s_m, model));
  }
  return out;
}

Vec4 sample_gaussian(Rng& rng, const Mat4& cov) {
  Eigen::SelfAdjointEigenSolver<Mat4> eig(cov);
  Vec4 n;
  for (int i = 0; i < 4; ++i) n[i] = gaussian(rng);
  return eig.eigenvectors() *
         (eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * n);
}

}  // namespace airhockey::estimator
