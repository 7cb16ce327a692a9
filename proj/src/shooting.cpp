#include "airhockey/shooting.hpp"

#include <cmath>

namespace airhockey::shooting {

namespace {

Vec4 mirror_state(const Vec4& s) { return {s[0], -s[1], s[2], -s[3]}; }

Belief mirror_belief(const Belief& b) {
  Belief out;
  out.mean = mirror_state(b.mean);
  const Vec4 signs{1, -1, 1, -1};
  out.cov = signs.asDiagonal() * b.cov * signs.asDiagonal();
  out.stamp = b.stamp;
  return out;
}

struct GridPoint {
  double angle = 0;
  ShotEval eval;
};

/// Comparator realizing "ties broken toward smaller |a|".
bool better(const GridPoint& lhs, const GridPoint& rhs) {
  if (lhs.eval.cost != rhs.eval.cost) return lhs.eval.cost < rhs.eval.cost;
  if (std::abs(lhs.angle) != std::abs(rhs.angle)) return std::abs(lhs.angle) < std::abs(rhs.angle);
  return lhs.angle > rhs.angle;
}

}  // namespace

double gaussian_interval_mass(double mu, double sigma, double half_width) {
  const double m = std::abs(mu);
  if (sigma <= 0) return m < half_width ? 1.0 : 0.0;
  const double inv = 1.0 / (sigma * std::sqrt(2.0));
  return 0.5 * (std::erfc((m - half_width) * inv) - std::erfc((m + half_width) * inv));
}

std::optional<Vec2> contact_pose_from_angle(const Vec2& puck_pos, double a,
                                            const sim::SimParams& params) {
  const Vec2 pose = puck_pos - params.geom.contact_distance() * dir_from_angle(a);
  if (pose[0] < params.mallet_x_min() || pose[0] > params.mallet_x_max() ||
      std::abs(pose[1]) > params.mallet_y_max()) {
    return std::nullopt;
  }
  return pose;
}

ShotEval shot_cost(double a, const Belief& belief_at_contact, const sim::SimParams& params,
                   const PiecewiseModel& model, const ShotWeights& weights, int horizon,
                   const SpeedCap& cap) {
  ShotEval out;
  const auto pose = contact_pose_from_angle(belief_at_contact.mean.head<2>(), a, params);
  if (!pose) return out;  // +inf sentinel, infeasible

  const Vec2 dir = dir_from_angle(a);
  const double speed = cap.at(*pose);
  Vec4 s_m;
  s_m << *pose, speed * dir;

  Belief b = estimator::ekf_predict(belief_at_contact, s_m, model);
  const double goal_line = params.geom.half_length();
  const double half_mouth = 0.5 * params.geom.goal_width;

  out.feasible = true;
  out.p_goal = 0;
  out.expected_vx = 0;
  double prev_x = belief_at_contact.mean[0];
  Belief prev = b;
  for (int k = 0; k < horizon; ++k) {
    if (b.mean[0] >= goal_line && prev_x < goal_line) {
      const double span = b.mean[0] - prev_x;
      const double tau = span > 0 ? (goal_line - prev_x) / span : 1.0;
      const double mu_y = (k == 0)
                              ? b.mean[1]
                              : prev.mean[1] + tau * (b.mean[1] - prev.mean[1]);
      const double var_y =
          (k == 0) ? b.cov(1, 1) : prev.cov(1, 1) + tau * (b.cov(1, 1) - prev.cov(1, 1));
      const double mu_vx =
          (k == 0) ? b.mean[2] : prev.mean[2] + tau * (b.mean[2] - prev.mean[2]);
      out.p_goal = gaussian_interval_mass(mu_y, std::sqrt(std::max(var_y, 0.0)), half_mouth);
      out.expected_vx = mu_vx;
      break;
    }
    prev = b;
    prev_x = b.mean[0];
    b = estimator::ekf_predict(b, std::nullopt, model);
  }

  out.cost = -weights.w_goal * out.p_goal - weights.w_vel * out.expected_vx +
             (out.p_goal < weights.p_min ? weights.w_penalty : 0.0);
  return out;
}

std::optional<ShotPlan> solve_shot(const Belief& belief, const sim::SimParams& params,
                                   const PiecewiseModel& model, const ShotWeights& weights,
                                   const SolveOptions& opts) {
  if (opts.grid_n < 8) throw std::invalid_argument("solve_shot: grid_n must be >= 8");

  // Propagate to the preset contact time (mallet treated as far away).
  Belief at_contact = belief;
  const int steps = std::max(0, static_cast<int>(std::lround(opts.contact_delay / model.dt())));
  for (int k = 0; k < steps; ++k) {
    at_contact = estimator::ekf_predict(at_contact, std::nullopt, model);
  }

  // Solve in the y >= 0 canonical half so mirrored beliefs give mirrored
  // angles bit-exactly.
  const bool mirrored = at_contact.mean[1] < 0;
  const Belief canon = mirrored ? mirror_belief(at_contact) : at_contact;

  auto evaluate = [&](double a) {
    return GridPoint{a, shot_cost(a, canon, params, model, weights, opts.horizon, opts.cap)};
  };

  const double span = opts.angle_hi - opts.angle_lo;
  std::optional<GridPoint> best;
  int best_idx = -1;
  std::vector<GridPoint> grid(opts.grid_n);
  for (int i = 0; i < opts.grid_n; ++i) {
    grid[i] = evaluate(opts.angle_lo + (i + 0.5) * span / opts.grid_n);
    if (grid[i].eval.feasible && (!best || better(grid[i], *best))) {
      best = grid[i];
      best_idx = i;
    }
  }
  if (!best) return std::nullopt;  // every angle infeasible

  // Two bisection passes around the best grid cell.
  GridPoint left = best_idx > 0 ? grid[best_idx - 1] : *best;
  GridPoint right = best_idx + 1 < opts.grid_n ? grid[best_idx + 1] : *best;
  GridPoint center = *best;
  for (int pass = 0; pass < 2; ++pass) {
    const GridPoint ml = evaluate(0.5 * (left.angle + center.angle));
    const GridPoint mr = evaluate(0.5 * (center.angle + right.angle));
    const GridPoint pts[5] = {left, ml, center, mr, right};
    int bi = 0;
    for (int i = 1; i < 5; ++i) {
      if (pts[i].eval.feasible && (!pts[bi].eval.feasible || better(pts[i], pts[bi]))) bi = i;
    }
    left = pts[std::max(0, bi - 1)];
    center = pts[bi];
    right = pts[std::min(4, bi + 1)];
  }
  if (!center.eval.feasible) return std::nullopt;

  const double angle = mirrored ? -center.angle : center.angle;
  const auto pose = contact_pose_from_angle(at_contact.mean.head<2>(), angle, params);
  if (!pose) return std::nullopt;
  const Vec2 dir = dir_from_angle(angle);
  const double speed = opts.cap.at(*pose);

  ShotPlan plan;
  plan.angle = angle;
  plan.contact_mallet_state = {(*pose)[0], (*pose)[1], speed * dir[0], speed * dir[1]};
  plan.contact_time = belief.stamp + steps * model.dt();  // quantized to the control grid
  plan.p_goal = center.eval.p_goal;
  plan.cost = center.eval.cost;
  return plan;
}

}  // namespace airhockey::shooting
