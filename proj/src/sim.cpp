#include "airhockey/sim.hpp"

#include <cmath>
#include <stdexcept>

namespace airhockey::sim {

namespace {

constexpr double kGoalLatchDepth = 1e-3;  // resting depth of a scored puck past the line

bool finite(const Vec2& v) { return std::isfinite(v[0]) && std::isfinite(v[1]); }

bool finite(const PuckState& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.vx) && std::isfinite(p.vy);
}

bool finite(const MalletState& m) {
  return std::isfinite(m.x) && std::isfinite(m.y) && std::isfinite(m.vx) && std::isfinite(m.vy);
}

Vec2 clamp_speed(const Vec2& v, double cap) {
  const double n = v.norm();
  if (n <= cap || n == 0.0) return v;
  return v * (cap / n);
}

}  // namespace

double wall_surface_distance(const PuckState& p, const TableGeometry& g) {
  double d = g.half_width() - std::abs(p.y);
  if (std::abs(p.y) >= 0.5 * g.goal_width) {
    d = std::min(d, g.half_length() - std::abs(p.x));
  }
  return d;
}

const char* to_string(Mode m) {
  switch (m) {
    case Mode::Free: return "free";
    case Mode::WallContact: return "wall";
    case Mode::MalletContact: return "mallet";
  }
  return "?";
}

const char* to_string(GoalSide s) { return s == GoalSide::Ours ? "ours" : "theirs"; }

WallReflection reflect_wall(const Vec2& v, const Vec2& normal, double e_n, double e_t) {
  const double vn = v.dot(normal);
  if (vn >= 0.0) return {v, false};  // separating, nothing to do
  const Vec2 v_normal = vn * normal;
  const Vec2 v_tangent = v - v_normal;
  return {e_t * v_tangent - e_n * v_normal, true};
}

PuckState resolve_mallet_contact(const PuckState& puck, const MalletState& mallet,
                                 double e_m, const TableGeometry& geom) {
  const Vec2 d = puck.pos() - mallet.pos();
  const double dist = d.norm();
  if (dist < 1e-9) {
    throw std::invalid_argument("resolve_mallet_contact: coincident centers, degenerate normal");
  }
  const Vec2 n = d / dist;
  PuckState out = puck;

  const Vec2 rel = puck.vel() - mallet.vel();
  const double rel_n = rel.dot(n);
  if (rel_n < 0.0) {
    // Mallet treated as infinitely massive: reflect the relative normal
    // component, keep the tangential relative velocity.
    const Vec2 v_new = mallet.vel() + rel - (1.0 + e_m) * rel_n * n;
    out.vx = v_new[0];
    out.vy = v_new[1];
  }
  // Push the puck out of penetration along the contact normal.
  const Vec2 p_new = mallet.pos() + geom.contact_distance() * n;
  out.x = p_new[0];
  out.y = p_new[1];
  return out;
}

Mode classify_mode(const PuckState& puck, const MalletState& mallet,
                   const TableGeometry& geom, double eps) {
  const double center_dist = (puck.pos() - mallet.pos()).norm();
  if (center_dist <= geom.contact_distance() + eps) return Mode::MalletContact;
  if (wall_surface_distance(puck, geom) <= geom.puck_radius + eps) return Mode::WallContact;
  return Mode::Free;
}

std::optional<GoalSide> check_goal(const PuckState& puck, const TableGeometry& geom) {
  if (std::abs(puck.y) >= 0.5 * geom.goal_width) return std::nullopt;
  if (puck.x > geom.half_length()) return GoalSide::Theirs;
  if (puck.x < -geom.half_length()) return GoalSide::Ours;
  return std::nullopt;
}

Vec2 observe(const WorldState& world, Rng& rng, double sigma_obs) {
  if (!(sigma_obs >= 0)) throw std::invalid_argument("observe: sigma_obs must be >= 0");
  const double nx = gaussian(rng);
  const double ny = gaussian(rng);
  return {world.puck.x + sigma_obs * nx, world.puck.y + sigma_obs * ny};
}

WorldState step(const WorldState& world, const MalletCommand& cmd, double dt,
                const SimParams& params) {
  if (!(dt > 0) || !std::isfinite(dt) || !finite(world.puck) || !finite(world.mallet) ||
      !finite(cmd.target_velocity)) {
    throw std::invalid_argument("sim::step: non-finite input");
  }
  const TableGeometry& g = params.geom;
  const Vec2 v_cmd = clamp_speed(cmd.target_velocity, params.mallet_speed_cap);

  WorldState out = world;
  out.last_contact.reset();

  const int n_sub = std::max(1, static_cast<int>(std::lround(dt / params.substep)));
  const double h = dt / n_sub;
  const double decay = std::exp(-g.damping_coeff * h);
  const double hl = g.half_length();
  const double hw = g.half_width();
  const double rp = g.puck_radius;

  for (int i = 0; i < n_sub; ++i) {
    const double t = world.sim_time + (i + 1) * h;

    // Mallet: velocity-commanded disc, clamped to its half.
    const Vec2 m_old = out.mallet.pos();
    Vec2 m_new = m_old + v_cmd * h;
    m_new[0] = std::clamp(m_new[0], params.mallet_x_min(), params.mallet_x_max());
    m_new[1] = std::clamp(m_new[1], -params.mallet_y_max(), params.mallet_y_max());
    const Vec2 m_vel = (m_new - m_old) / h;  // realized velocity after clamping
    out.mallet = {m_new[0], m_new[1], m_vel[0], m_vel[1]};

    if (out.scored) continue;  // puck rests in the goal slot

    // Puck: exponential velocity damping, then position update.
    PuckState& p = out.puck;
    p.vx *= decay;
    p.vy *= decay;
    p.x += p.vx * h;
    p.y += p.vy * h;

    // Puck-mallet contact.
    const Vec2 d = p.pos() - out.mallet.pos();
    const double dist = d.norm();
    if (dist <= g.contact_distance() && dist > 1e-9) {
      p = resolve_mallet_contact(p, out.mallet, g.mallet_restitution, g);
      out.last_contact = ContactEvent{ContactEvent::Kind::Mallet, t, d / dist};
    }

    // Side walls: mirror the overshoot to keep collision timing tight.
    if (p.y > hw - rp) {
      const auto r = reflect_wall(p.vel(), {0, -1}, g.wall_restitution, g.wall_tangential_retention);
      if (r.reflected) {
        p.vx = r.velocity[0];
        p.vy = r.velocity[1];
        out.last_contact = ContactEvent{ContactEvent::Kind::Wall, t, {0, -1}};
      }
      p.y = std::max(2.0 * (hw - rp) - p.y, -(hw - rp));
    } else if (p.y < -(hw - rp)) {
      const auto r = reflect_wall(p.vel(), {0, 1}, g.wall_restitution, g.wall_tangential_retention);
      if (r.reflected) {
        p.vx = r.velocity[0];
        p.vy = r.velocity[1];
        out.last_contact = ContactEvent{ContactEvent::Kind::Wall, t, {0, 1}};
      }
      p.y = std::min(2.0 * (-(hw - rp)) - p.y, hw - rp);
    }

    // End walls, with the goal mouth open.
    const bool in_mouth = std::abs(p.y) < 0.5 * g.goal_width;
    if (p.x > hl - rp) {
      if (in_mouth) {
        if (p.x >= hl) {
          out.scored = GoalSide::Theirs;
          p = {hl + kGoalLatchDepth, p.y, 0, 0};
        }
      } else {
        const auto r = reflect_wall(p.vel(), {-1, 0}, g.wall_restitution, g.wall_tangential_retention);
        if (r.reflected) {
          p.vx = r.velocity[0];
          p.vy = r.velocity[1];
          out.last_contact = ContactEvent{ContactEvent::Kind::Wall, t, {-1, 0}};
        }
        p.x = std::max(2.0 * (hl - rp) - p.x, -(hl - rp));
      }
    } else if (p.x < -(hl - rp)) {
      if (in_mouth) {
        if (p.x <= -hl) {
          out.scored = GoalSide::Ours;
          p = {-(hl + kGoalLatchDepth), p.y, 0, 0};
        }
      } else {
        const auto r = reflect_wall(p.vel(), {1, 0}, g.wall_restitution, g.wall_tangential_retention);
        if (r.reflected) {
          p.vx = r.velocity[0];
          p.vy = r.velocity[1];
          out.last_contact = ContactEvent{ContactEvent::Kind::Wall, t, {1, 0}};
        }
        p.x = std::min(2.0 * (-(hl - rp)) - p.x, hl - rp);
      }
    }
  }

  out.sim_time = world.sim_time + dt;
  return out;
}

bool puck_in_bounds(const WorldState& world, const TableGeometry& geom, double tol) {
  const PuckState& p = world.puck;
  const double hl = geom.half_length();
  const double hw = geom.half_width();
  if (std::abs(p.y) > hw - geom.puck_radius + tol) return false;
  if (std::abs(p.x) <= hl - geom.puck_radius + tol) return true;
  // Transit through (or rest inside) the goal mouth.
  return std::abs(p.y) < 0.5 * geom.goal_width && std::abs(p.x) <= hl + kGoalLatchDepth + tol;
}

}  // namespace airhockey::sim
