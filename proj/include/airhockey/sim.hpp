#pragma once

#include <optional>

#include "airhockey/geometry.hpp"
#include "airhockey/rng.hpp"

namespace airhockey::sim {

enum class Mode { Free, WallContact, MalletContact };
enum class GoalSide { Ours, Theirs };

const char* to_string(Mode m);
const char* to_string(GoalSide s);

struct PuckState {
  double x = 0, y = 0, vx = 0, vy = 0;

  Vec2 pos() const { return {x, y}; }
  Vec2 vel() const { return {vx, vy}; }
  Vec4 as_vec() const { return {x, y, vx, vy}; }
  static PuckState from_vec(const Vec4& s) { return {s[0], s[1], s[2], s[3]}; }
};

struct MalletState {
  double x = 0, y = 0, vx = 0, vy = 0;

  Vec2 pos() const { return {x, y}; }
  Vec2 vel() const { return {vx, vy}; }
  Vec4 as_vec() const { return {x, y, vx, vy}; }
  static MalletState from_vec(const Vec4& s) { return {s[0], s[1], s[2], s[3]}; }
};

struct ContactEvent {
  enum class Kind { Wall, Mallet };
  Kind kind = Kind::Wall;
  double time = 0;      // sim time of the resolving substep
  Vec2 normal{0, 0};    // unit normal, pointing into the table / away from mallet
};

struct WorldState {
  PuckState puck;
  MalletState mallet;
  double sim_time = 0;
  std::optional<ContactEvent> last_contact;
  std::optional<GoalSide> scored;  // latched once the puck enters a goal
};

/// Velocity reference applied to the mallet for the next step, clamped to
/// the configured speed cap.
struct MalletCommand {
  Vec2 target_velocity{0, 0};
};

/// Simulation parameters beyond the table geometry.
struct SimParams {
  TableGeometry geom;
  double mallet_speed_cap = 2.0;  // [m/s]
  double mallet_x_margin = 0.0;   // mallet center must satisfy x <= -margin
  double substep = 1e-3;          // collision substep [s]

  double mallet_x_min() const { return -geom.half_length() + geom.mallet_radius; }
  double mallet_x_max() const { return -mallet_x_margin; }
  double mallet_y_max() const { return geom.half_width() - geom.mallet_radius; }
};

struct WallReflection {
  Vec2 velocity;
  bool reflected = false;  // false when the incoming velocity was separating
};

/// Decomposes v into wall-normal and tangential parts and recombines with
/// the respective restitution factors. `normal` points into the table.
WallReflection reflect_wall(const Vec2& v, const Vec2& normal, double e_n, double e_t);

/// Reflects the puck's relative velocity off an (infinitely massive) mallet
/// and pushes the puck out of penetration. Throws on coincident centers.
PuckState resolve_mallet_contact(const PuckState& puck, const MalletState& mallet,
                                 double e_m, const TableGeometry& geom);

/// Distance from the puck center to the nearest reflecting wall surface.
/// End walls do not count inside the goal mouth.
double wall_surface_distance(const PuckState& puck, const TableGeometry& geom);

/// Contact-mode classification with mallet priority on ties.
Mode classify_mode(const PuckState& puck, const MalletState& mallet,
                   const TableGeometry& geom, double eps = 1e-3);

/// Reports the goal a puck center has crossed into, if any.
std::optional<GoalSide> check_goal(const PuckState& puck, const TableGeometry& geom);

/// Noisy position observation; exact when sigma_obs == 0.
Vec2 observe(const WorldState& world, Rng& rng, double sigma_obs);

/// Advances the world by dt using fixed collision substeps. Pure function:
/// the input world is untouched. Throws std::invalid_argument on non-finite
/// input or dt <= 0.
WorldState step(const WorldState& world, const MalletCommand& cmd, double dt,
                const SimParams& params);

/// True when the puck satisfies its containment invariant (goal-latched
/// states are exempt: the puck rests just past the goal line).
bool puck_in_bounds(const WorldState& world, const TableGeometry& geom, double tol = 1e-6);

}  // namespace airhockey::sim
