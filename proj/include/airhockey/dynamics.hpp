#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "airhockey/sim.hpp"

namespace airhockey::dynamics {

using sim::Mode;

/// One observed step of the puck under a known mallet state. The mallet
/// velocity components hold the command applied over the step.
struct TransitionSample {
  Vec4 puck;       // s_p at k
  Vec4 mallet;     // s_m at k
  Vec4 puck_next;  // s_p at k+1
  Mode mode = Mode::Free;
};

/// One locally-linear regime: s' ~ N(A s_p + B s_m, Sigma).
struct LinearMode {
  Mat4 A = Mat4::Identity();
  Mat4 B = Mat4::Zero();
  Mat4 Sigma = Mat4::Zero();

  /// Projects onto the subspace equivariant under the sign flip `signs`
  /// (entries coupling odd and even coordinates become exact zeros).
  LinearMode mirror_projected(const Vec4& signs) const;
};

struct FitOptions {
  double trim_sigma = 0.0;   // 0 disables residual trimming
  int trim_passes = 1;
  double ridge = 0.0;        // Tikhonov term for structurally collinear regressors
  double max_condition = 1e10;
};

struct RankDeficiencyError : std::runtime_error {
  explicit RankDeficiencyError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Least-squares fit of [A|B] on samples expressed in one common frame,
/// with Sigma the unbiased residual covariance. Throws RankDeficiencyError
/// when the normal matrix is singular or its condition number exceeds
/// opts.max_condition, naming the deficient regressor columns.
LinearMode fit_mode(std::span<const TransitionSample> samples, const FitOptions& opts = {});

/// Orthogonal map sending the nearest wall's inward normal to the canonical
/// top-wall normal (0,-1).
Mat2 wall_canonical_rotation(const Vec2& puck_pos, const TableGeometry& geom);

/// Rotation sending the mallet-to-puck contact normal to (1,0). Built from
/// vector components (no trig) so mirrored inputs map bit-exactly.
Mat2 contact_rotation(const Vec2& puck_pos, const Vec2& mallet_pos);

/// Applies a 2x2 orthogonal map blockwise to positions and velocities.
Vec4 transform_state(const Mat2& Q, const Vec4& s);

/// The three-mode piecewise-linear puck model of the identification stage.
/// Wall and mallet modes are stored in their canonical contact frames and
/// conjugated back at prediction time.
class PiecewiseModel {
 public:
  PiecewiseModel() = default;
  PiecewiseModel(LinearMode free, LinearMode wall, LinearMode mallet, double dt,
                 TableGeometry geom)
      : free_(std::move(free)), wall_(std::move(wall)), mallet_(std::move(mallet)),
        dt_(dt), geom_(std::move(geom)) {}

  double dt() const { return dt_; }
  const TableGeometry& geometry() const { return geom_; }
  const LinearMode& mode(Mode m) const;
  LinearMode& mode(Mode m);

  /// Mode selection; with no mallet state only Free/Wall are considered.
  Mode mode_at(const Vec4& s_p, const std::optional<Vec4>& s_m) const;

  /// Mode whose map actually applies: contact modes only bind while the
  /// velocity approaches the contact, matching the simulator's resolve
  /// rule. Separating contact states follow the free map.
  Mode effective_mode(const Vec4& s_p, const std::optional<Vec4>& s_m) const;

  /// Mean one-step prediction, E[s_p'| s_p, s_m].
  Vec4 predict_mean(const Vec4& s_p, const std::optional<Vec4>& s_m) const;

  /// Same map with the mode pinned (used for linearization).
  Vec4 predict_mean_with_mode(Mode m, const Vec4& s_p, const std::optional<Vec4>& s_m) const;

  /// Jacobian of predict_mean w.r.t. s_p by central differences with the
  /// mode pinned at s_p. Captures the contact-frame rotation sensitivity.
  Mat4 linearize(const Vec4& s_p, const std::optional<Vec4>& s_m) const;

  /// Process noise of the active mode, expressed in the table frame.
  Mat4 noise_at(const Vec4& s_p, const std::optional<Vec4>& s_m) const;

  nlohmann::json to_json() const;
  static PiecewiseModel from_json(const nlohmann::json& j);

 private:
  LinearMode free_, wall_, mallet_;
  double dt_ = 0.02;
  TableGeometry geom_;
};

/// Randomized-episode data generation: free launches, wall drills and
/// mallet-contact drills, each labelled by classify_mode at time k.
struct ExplorationConfig {
  int steps_per_episode = 100;
  double free_fraction = 0.35;
  double wall_fraction = 0.25;  // remainder: mallet-contact drills
  double max_launch_speed = 3.0;
  int sweep_period = 10;  // steps between mallet command changes
};

std::vector<TransitionSample> collect_transitions(int n_episodes, const ExplorationConfig& cfg,
                                                  const sim::SimParams& params, double dt,
                                                  std::uint64_t seed);

/// Full identification pipeline: canonicalize per mode, fit, and (optionally)
/// project each mode onto its physical mirror symmetry.
struct PipelineOptions {
  FitOptions fit{.trim_sigma = 4.0, .trim_passes = 6};
  double mallet_ridge = 1e-9;  // contact frame makes two position columns collinear
  bool symmetrize = true;
};

PiecewiseModel fit_piecewise(std::span<const TransitionSample> samples,
                             const TableGeometry& geom, double dt,
                             const PipelineOptions& opts = {});

}  // namespace airhockey::dynamics
