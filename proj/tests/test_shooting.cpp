#include <doctest.h>

#include <cmath>

#include "airhockey/shooting.hpp"
#include "test_helpers.hpp"

using namespace airhockey;
using namespace airhockey::shooting;
using estimator::Belief;

namespace {

Belief contact_belief(double x, double y, double vx = 0, double vy = 0,
                      double pos_sigma = 1e-4, double vel_sigma = 1e-4) {
  Belief b;
  b.mean << x, y, vx, vy;
  b.cov = Vec4{pos_sigma * pos_sigma, pos_sigma * pos_sigma, vel_sigma * vel_sigma,
               vel_sigma * vel_sigma}
              .asDiagonal();
  return b;
}

}  // namespace

TEST_SUITE("shooting") {

TEST_CASE("contact_pose_from_angle: formula and constraint") {
  const auto& params = testutil::default_params();
  const double d = params.geom.contact_distance();
  CHECK(d == doctest::Approx(0.0798).epsilon(1e-12));

  auto pose = contact_pose_from_angle({0, 0}, 0.0, params);
  REQUIRE(pose.has_value());
  CHECK((*pose)[0] == doctest::Approx(-0.0798).epsilon(1e-12));
  CHECK((*pose)[1] == doctest::Approx(0.0).epsilon(1e-12));

  pose = contact_pose_from_angle({0, 0}, M_PI / 2, params);
  REQUIRE(pose.has_value());
  CHECK((*pose)[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK((*pose)[1] == doctest::Approx(-0.0798).epsilon(1e-12));

  Rng rng = make_rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 puck{uniform(rng, -0.6, -0.1), uniform(rng, -0.3, 0.3)};
    const double a = uniform(rng, -M_PI, M_PI);
    const auto p = contact_pose_from_angle(puck, a, params);
    if (!p) continue;
    CHECK(std::abs((*p - puck).norm() - d) < 1e-9);
  }
}

TEST_CASE("contact_pose_from_angle: out-of-range pose flagged infeasible") {
  const auto& params = testutil::default_params();
  // puck deep in the opponent half: mallet cannot reach past the centerline
  CHECK_FALSE(contact_pose_from_angle({0.5, 0}, 0.0, params).has_value());
}

TEST_CASE("speed cap: constant and arm-limited") {
  SpeedCap cap;
  CHECK(cap.at({-0.3, 0.2}) == 2.0);

  SpeedCap armed{2.0, &arm::ArmModel::planar_default()};
  const auto& model = arm::ArmModel::planar_default();
  const Vec2 stretched = model.base + Vec2{model.lengths.sum() - 1e-3, 0};
  CHECK(armed.at(stretched) <= 2.0);
  // interior position keeps a healthy cap
  CHECK(armed.at({-0.5, 0.0}) > 0.5);
}

TEST_CASE("shot_cost: straight shot from the centerline is near-certain") {
  const auto& model = testutil::learned_model();
  const auto& params = testutil::default_params();
  const Belief b = contact_belief(-0.3, 0.0);
  const ShotWeights w;
  const auto eval = shot_cost(0.0, b, params, model, w, 150, {});
  REQUIRE(eval.feasible);
  CHECK(eval.p_goal >= 0.999);
  CHECK(eval.expected_vx > 1.0);
  CHECK(eval.cost ==
        doctest::Approx(-w.w_goal * eval.p_goal - w.w_vel * eval.expected_vx).epsilon(1e-12));
}

TEST_CASE("shot_cost: shooting backwards never crosses, penalty applies") {
  const auto& model = testutil::learned_model();
  const auto& params = testutil::default_params();
  const Belief b = contact_belief(-0.3, 0.0);
  const ShotWeights w;
  const auto eval = shot_cost(M_PI, b, params, model, w, 150, {});
  REQUIRE(eval.feasible);
  CHECK(eval.p_goal == 0.0);
  CHECK(eval.cost == doctest::Approx(w.w_penalty).epsilon(1e-9));
}

TEST_CASE("shot_cost: infeasible pose returns the +inf sentinel") {
  const auto& model = testutil::learned_model();
  const auto& params = testutil::default_params();
  const Belief b = contact_belief(0.5, 0.0);
  const auto eval = shot_cost(0.0, b, params, model, {}, 150, {});
  CHECK_FALSE(eval.feasible);
  CHECK(std::isinf(eval.cost));
}

TEST_CASE("shot_cost: finite for every feasible angle") {
  const auto& model = testutil::learned_model();
  const auto& params = testutil::default_params();
  Rng rng = make_rng(9);
  for (int i = 0; i < 200; ++i) {
    const Belief b = contact_belief(uniform(rng, -0.7, -0.1), uniform(rng, -0.35, 0.35),
                                    gaussian(rng, 0, 0.1), gaussian(rng, 0, 0.1));
    const double a = uniform(rng, -M_PI / 2, M_PI / 2);
    const auto eval = shot_cost(a, b, params, model, {}, 150, {});
    if (eval.feasible) CHECK(std::isfinite(eval.cost));
    if (!eval.feasible) CHECK(std::isinf(eval.cost));
  }
}

TEST_CASE("shot_cost: analytic p_goal tracks Monte Carlo goal frequency") {
  const auto& model = testutil::learned_model();
  const auto& params = testutil::default_params();
  Rng rng = make_rng(33);
  int cases = 0;
  while (cases < 5) {
    const double x = uniform(rng, -0.65, -0.15);
    const double y = uniform(rng, -0.3, 0.3);
    const Belief b = contact_belief(x, y, gaussian(rng, 0, 0.05), gaussian(rng, 0, 0.05),
                                    0.003, 0.05);
    const double aim = std::atan2(-y, params.geom.half_length() - x);
    const double a = aim + uniform(rng, -0.25, 0.25);
    const auto pose = contact_pose_from_angle({x, y}, a, params);
    if (!pose) continue;
    const auto eval = shot_cost(a, b, params, model, {}, 150, {});
    REQUIRE(eval.feasible);
    const double freq =
        testutil::mc_goal_frequency(b, a, SpeedCap{}.at(*pose), 2000, 100 + cases, params);
    CHECK(std::abs(eval.p_goal - freq) <= 0.07);
    ++cases;
  }
}

TEST_CASE("solve_shot: symmetric scenario lands near zero") {
  const auto& model = testutil::learned_model();
  const auto& params = testutil::default_params();
  Belief b = contact_belief(-0.35, 0.0);
  SolveOptions opts;
  opts.contact_delay = 0;  // plan at the current belief
  const auto plan = solve_shot(b, params, model, {}, opts);
  REQUIRE(plan.has_value());
  const double resolution = (opts.angle_hi - opts.angle_lo) / opts.grid_n;
  CHECK(std::abs(plan->angle) <= resolution);
  CHECK(plan->p_goal > 0.99);
  // contact constraint holds exactly by construction
  const Vec2 pose = plan->contact_mallet_state.pos();
  CHECK(std::abs((pose - b.mean.head<2>()).norm() - params.geom.contact_distance()) < 1e-9);
  // mallet speed pinned at the cap
  CHECK(plan->contact_mallet_state.vel().norm() == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("solve_shot: mirror symmetry is exact") {
  const auto& model = testutil::learned_model();
  const auto& params = testutil::default_params();
  Rng rng = make_rng(17);
  SolveOptions opts;
  opts.contact_delay = 0;
  for (int i = 0; i < 25; ++i) {
    Belief b = contact_belief(uniform(rng, -0.6, -0.15), uniform(rng, -0.3, 0.3),
                              gaussian(rng, 0, 0.1), gaussian(rng, 0, 0.1), 0.003, 0.05);
    Belief m = b;
    m.mean[1] = -m.mean[1];
    m.mean[3] = -m.mean[3];
    const auto p1 = solve_shot(b, params, model, {}, opts);
    const auto p2 = solve_shot(m, params, model, {}, opts);
    REQUIRE(p1.has_value());
    REQUIRE(p2.has_value());
    CHECK(p1->angle == -p2->angle);
    CHECK(p1->cost == p2->cost);
    CHECK(p1->p_goal == p2->p_goal);
  }
}

TEST_CASE("solve_shot: off-center puck aims toward the goal center") {
  const auto& model = testutil::learned_model();
  const auto& params = testutil::default_params();
  Belief b = contact_belief(-0.4, 0.2);
  SolveOptions opts;
  opts.contact_delay = 0;
  const auto plan = solve_shot(b, params, model, {}, opts);
  REQUIRE(plan.has_value());
  CHECK(plan->angle < 0);

  // dense-grid oracle: exhaustive 4096-point scan
  double best_cost = std::numeric_limits<double>::infinity();
  double best_a = 0;
  for (int i = 0; i < 4096; ++i) {
    const double a = opts.angle_lo + (i + 0.5) * (opts.angle_hi - opts.angle_lo) / 4096;
    const auto eval = shot_cost(a, b, params, model, {}, opts.horizon, opts.cap);
    if (eval.feasible &&
        (eval.cost < best_cost ||
         (eval.cost == best_cost && std::abs(a) < std::abs(best_a)))) {
      best_cost = eval.cost;
      best_a = a;
    }
  }
  const double resolution = (opts.angle_hi - opts.angle_lo) / opts.grid_n / 2.0;
  CHECK(std::abs(plan->angle - best_a) <= resolution);
}

TEST_CASE("solve_shot: argmin invariant to uniform weight scaling") {
  const auto& model = testutil::learned_model();
  const auto& params = testutil::default_params();
  Belief b = contact_belief(-0.45, 0.15);
  SolveOptions opts;
  opts.contact_delay = 0;
  const ShotWeights w1{1.0, 0.1, 10.0, 0.2};
  const ShotWeights w2{3.0, 0.3, 30.0, 0.2};
  const auto p1 = solve_shot(b, params, model, w1, opts);
  const auto p2 = solve_shot(b, params, model, w2, opts);
  REQUIRE(p1.has_value());
  REQUIRE(p2.has_value());
  CHECK(p1->angle == p2->angle);
}

TEST_CASE("solve_shot: velocity weight trades goal probability monotonically") {
  const auto& model = testutil::learned_model();
  const auto& params = testutil::default_params();
  Belief b = contact_belief(-0.5, 0.28, 0, 0, 0.006, 0.08);
  SolveOptions opts;
  opts.contact_delay = 0;
  double prev_p = 1.1;
  for (const double wv : {0.0, 0.05, 0.1, 0.3, 1.0, 3.0}) {
    ShotWeights w;
    w.w_vel = wv;
    w.w_penalty = 0;
    const auto plan = solve_shot(b, params, model, w, opts);
    REQUIRE(plan.has_value());
    CHECK(plan->p_goal <= prev_p + 1e-9);
    prev_p = plan->p_goal;
  }
}

TEST_CASE("solve_shot: no feasible angle reports no shot") {
  const auto& model = testutil::learned_model();
  const auto& params = testutil::default_params();
  const Belief b = contact_belief(0.6, 0.0);  // deep in the opponent half
  SolveOptions opts;
  opts.contact_delay = 0;
  CHECK_FALSE(solve_shot(b, params, model, {}, opts).has_value());
}

}  // TEST_SUITE
