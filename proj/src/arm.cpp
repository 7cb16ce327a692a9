#include "airhockey/arm.hpp"

#include <cmath>
#include <limits>

namespace airhockey::arm {

namespace {

using Mat3 = Eigen::Matrix3d;

double wrap_angle(double a) {
  while (a > M_PI) a -= 2 * M_PI;
  while (a < -M_PI) a += 2 * M_PI;
  return a;
}

bool within_limits(const Vec3& q, const ArmModel& arm) {
  return (q.array() >= arm.q_min.array()).all() && (q.array() <= arm.q_max.array()).all();
}

/// Inscribed radius of the zonotope spanned by the scaled Jacobian columns.
double inscribed_radius(const Mat23& J, const Vec3& qd_max) {
  Vec2 g0 = J.col(0) * qd_max[0];
  Vec2 g1 = J.col(1) * qd_max[1];
  Vec2 g2 = J.col(2) * qd_max[2];
  double best = std::numeric_limits<double>::infinity();
  const int n = 720;
  for (int i = 0; i < n; ++i) {
    const double phi = M_PI * i / n;
    const Vec2 u{std::cos(phi), std::sin(phi)};
    const double support = std::abs(u.dot(g0)) + std::abs(u.dot(g1)) + std::abs(u.dot(g2));
    best = std::min(best, support);
  }
  return best;
}

struct QpProblem {
  Mat3 H;   // quadratic form (without the factor 2)
  Vec3 b;   // linear term: f(u) = u'Hu - 2 b'u + const
  Vec3 lo, hi;
};

Vec3 qp_gradient(const QpProblem& p, const Vec3& u) { return 2.0 * (p.H * u - p.b); }

double qp_objective(const QpProblem& p, const Vec3& u) {
  return u.dot(p.H * u) - 2.0 * p.b.dot(u);
}

/// Exhaustive active-set solve; H must be positive definite.
Vec3 qp_solve_box(const QpProblem& p) {
  constexpr double kPrimalTol = 1e-10;
  constexpr double kDualTol = 1e-9;
  Vec3 best = Vec3::Zero();
  double best_obj = std::numeric_limits<double>::infinity();
  bool found = false;

  for (int code = 0; code < 27; ++code) {
    int state[3];
    int c = code;
    for (int i = 0; i < 3; ++i, c /= 3) state[i] = c % 3;  // 0 free, 1 lo, 2 hi

    Vec3 u;
    std::vector<int> free_idx;
    for (int i = 0; i < 3; ++i) {
      if (state[i] == 0) {
        free_idx.push_back(i);
        u[i] = 0;
      } else {
        u[i] = state[i] == 1 ? p.lo[i] : p.hi[i];
      }
    }

    const int nf = static_cast<int>(free_idx.size());
    if (nf > 0) {
      Eigen::MatrixXd Hff(nf, nf);
      Eigen::VectorXd rhs(nf);
      for (int r = 0; r < nf; ++r) {
        double acc = p.b[free_idx[r]];
        for (int i = 0; i < 3; ++i) {
          if (state[i] != 0) acc -= p.H(free_idx[r], i) * u[i];
        }
        rhs[r] = acc;
        for (int cc = 0; cc < nf; ++cc) Hff(r, cc) = p.H(free_idx[r], free_idx[cc]);
      }
      const Eigen::VectorXd uf = Hff.ldlt().solve(rhs);
      for (int r = 0; r < nf; ++r) u[free_idx[r]] = uf[r];
    }

    bool ok = true;
    for (int i = 0; i < 3 && ok; ++i) {
      if (state[i] == 0) {
        ok = u[i] >= p.lo[i] - kPrimalTol && u[i] <= p.hi[i] + kPrimalTol;
      }
    }
    if (!ok) continue;
    const Vec3 g = qp_gradient(p, u);
    for (int i = 0; i < 3 && ok; ++i) {
      if (state[i] == 1) ok = g[i] >= -kDualTol;
      if (state[i] == 2) ok = g[i] <= kDualTol;
    }
    if (!ok) continue;

    // clip free coordinates that sit within tolerance of a bound
    Vec3 clipped = u.cwiseMax(p.lo).cwiseMin(p.hi);
    const double obj = qp_objective(p, clipped);
    if (!found || obj < best_obj) {
      found = true;
      best_obj = obj;
      best = clipped;
    }
  }
  return best;  // found is guaranteed: the optimum's active set is enumerated
}

}  // namespace

Vec2 fk(const Vec3& q, const ArmModel& arm) {
  Vec2 p = arm.base;
  double a = 0;
  for (int i = 0; i < 3; ++i) {
    a += q[i];
    p += arm.lengths[i] * Vec2{std::cos(a), std::sin(a)};
  }
  return p;
}

Mat23 jacobian(const Vec3& q, const ArmModel& arm) {
  double a = 0;
  Vec2 seg[3];
  for (int i = 0; i < 3; ++i) {
    a += q[i];
    seg[i] = arm.lengths[i] * Vec2{std::cos(a), std::sin(a)};
  }
  Mat23 J;
  for (int j = 0; j < 3; ++j) {
    Vec2 s{0, 0};
    for (int i = j; i < 3; ++i) s += seg[i];
    J(0, j) = -s[1];
    J(1, j) = s[0];
  }
  return J;
}

std::vector<Vec3> ik_solutions(const Vec2& target, const ArmModel& arm, int wrist_grid) {
  std::vector<Vec3> out;
  const double l1 = arm.lengths[0], l2 = arm.lengths[1], l3 = arm.lengths[2];
  for (int j = 0; j < wrist_grid; ++j) {
    const double psi = -M_PI + (j + 0.5) * (2 * M_PI / wrist_grid);
    const Vec2 wrist = target - l3 * Vec2{std::cos(psi), std::sin(psi)};
    const Vec2 rel = wrist - arm.base;
    const double d2 = rel.squaredNorm();
    const double d = std::sqrt(d2);
    if (d > l1 + l2 - 1e-9 || d < std::abs(l1 - l2) + 1e-9) continue;
    const double c2 = (d2 - l1 * l1 - l2 * l2) / (2 * l1 * l2);
    if (std::abs(c2) > 1.0) continue;
    const double elbow = std::acos(c2);
    for (const double q2 : {elbow, -elbow}) {
      const double q1 =
          std::atan2(rel[1], rel[0]) - std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
      const double q3 = wrap_angle(psi - q1 - q2);
      const Vec3 q{wrap_angle(q1), q2, q3};
      if (within_limits(q, arm) && (fk(q, arm) - target).norm() < 1e-6) out.push_back(q);
    }
  }
  return out;
}

double velocity_cap(const Vec2& pos, const ArmModel& arm) {
  double best = 0;
  for (const auto& q : ik_solutions(pos, arm)) {
    best = std::max(best, inscribed_radius(jacobian(q, arm), arm.qd_max));
  }
  return best;
}

void velocity_box(const JointState& state, const ArmModel& arm, double dt, Vec3& lo, Vec3& hi) {
  lo = (-arm.qd_max).cwiseMax((arm.q_min - state.q) / dt);
  hi = arm.qd_max.cwiseMin((arm.q_max - state.q) / dt);
}

JointState qp_track(const JointState& state, const sim::MalletCommand& cmd,
                    const ArmModel& arm, double dt) {
  const Mat23 J = jacobian(state.q, arm);
  QpProblem p;
  p.H = J.transpose() * J + (arm.lambda * dt * dt) * Mat3::Identity();
  p.b = J.transpose() * cmd.target_velocity + (arm.lambda * dt) * (arm.q_ref - state.q);
  velocity_box(state, arm, dt, p.lo, p.hi);

  const Vec3 qd = qp_solve_box(p);
  return {state.q + qd * dt, qd};
}

double kkt_residual(const JointState& state, const Vec3& qd_lo, const Vec3& qd_hi,
                    const sim::MalletCommand& cmd, const ArmModel& arm, double dt) {
  const Mat23 J = jacobian(state.q, arm);
  QpProblem p;
  p.H = J.transpose() * J + (arm.lambda * dt * dt) * Mat3::Identity();
  p.b = J.transpose() * cmd.target_velocity + (arm.lambda * dt) * (arm.q_ref - state.q);
  const Vec3 g = qp_gradient(p, state.qd);
  Vec3 proj;
  for (int i = 0; i < 3; ++i) {
    if (state.qd[i] <= qd_lo[i] + 1e-12) {
      proj[i] = std::min(g[i], 0.0);
    } else if (state.qd[i] >= qd_hi[i] - 1e-12) {
      proj[i] = std::max(g[i], 0.0);
    } else {
      proj[i] = g[i];
    }
  }
  return proj.norm();
}

const ArmModel& ArmModel::planar_default() {
  static const ArmModel model = [] {
    ArmModel m;
    const Vec2 home{-0.6, 0.0};
    double best_radius = -1;
    for (const auto& q : ik_solutions(home, m, 128)) {
      const double r = inscribed_radius(jacobian(q, m), m.qd_max);
      if (r > best_radius) {
        best_radius = r;
        m.q_ref = q;
      }
    }
    return m;
  }();
  return model;
}

}  // namespace airhockey::arm
