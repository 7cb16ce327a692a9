#include "airhockey/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace airhockey::dynamics {

namespace {

constexpr const char* kSchemaVersion = "dynamics-v1";

const char* kColumnNames[8] = {"puck.x",   "puck.y",   "puck.vx",   "puck.vy",
                               "mallet.x", "mallet.y", "mallet.vx", "mallet.vy"};

using Mat84 = Eigen::Matrix<double, 8, 4>;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using Vec8 = Eigen::Matrix<double, 8, 1>;

Vec8 regressor(const TransitionSample& s) {
  Vec8 x;
  x << s.puck, s.mallet;
  return x;
}

Mat4 block_transform(const Mat2& Q) {
  Mat4 T = Mat4::Zero();
  T.block<2, 2>(0, 0) = Q;
  T.block<2, 2>(2, 2) = Q;
  return T;
}

Vec2 clamp_speed(const Vec2& v, double cap) {
  const double n = v.norm();
  return (n <= cap || n == 0.0) ? v : Vec2(v * (cap / n));
}

std::vector<double> matrix_row_major(const Mat4& m) {
  std::vector<double> out(16);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out[4 * r + c] = m(r, c);
  return out;
}

Mat4 matrix_from_row_major(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 16) {
    throw std::runtime_error("dynamics model: matrix field must be 16 row-major doubles");
  }
  Mat4 m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = j[4 * r + c].get<double>();
  return m;
}

struct LsqResult {
  LinearMode mode;
  std::vector<char> kept;  // trimming mask over the input samples
};

LsqResult solve_least_squares(std::span<const TransitionSample> samples,
                              const std::vector<char>& mask, const FitOptions& opts) {
  Mat8 G = Mat8::Zero();
  Mat84 Gy = Mat84::Zero();
  long n = 0;
  for (size_t i = 0; i < samples.size(); ++i) {
    if (!mask[i]) continue;
    const Vec8 x = regressor(samples[i]);
    G.noalias() += x * x.transpose();
    Gy.noalias() += x * samples[i].puck_next.transpose();
    ++n;
  }

  Eigen::SelfAdjointEigenSolver<Mat8> eig(G);
  const auto& ev = eig.eigenvalues();
  const double lmax = ev.maxCoeff();
  const double lmin = ev.minCoeff();
  if (opts.ridge <= 0 && (lmin <= 0 || lmax / lmin > opts.max_condition)) {
    std::ostringstream msg;
    msg << "fit_mode: rank-deficient regressor (condition "
        << (lmin > 0 ? lmax / lmin : std::numeric_limits<double>::infinity())
        << "); deficient columns:";
    const auto v = eig.eigenvectors().col(0);
    for (int i = 0; i < 8; ++i) {
      if (std::abs(v[i]) > 0.3) msg << ' ' << kColumnNames[i];
    }
    throw RankDeficiencyError(msg.str());
  }
  if (opts.ridge > 0) {
    G += (opts.ridge * std::max(lmax, 1.0)) * Mat8::Identity();
  }

  const Mat84 theta = G.ldlt().solve(Gy);

  Mat4 sigma = Mat4::Zero();
  for (size_t i = 0; i < samples.size(); ++i) {
    if (!mask[i]) continue;
    const Vec4 r = samples[i].puck_next - theta.transpose() * regressor(samples[i]);
    sigma.noalias() += r * r.transpose();
  }
  sigma /= static_cast<double>(std::max<long>(n - 8, 1));
  sigma = 0.5 * (sigma + sigma.transpose()).eval();

  LsqResult res;
  res.mode.A = theta.topRows<4>().transpose();
  res.mode.B = theta.bottomRows<4>().transpose();
  res.mode.Sigma = sigma;
  res.kept = mask;
  return res;
}

}  // namespace

LinearMode LinearMode::mirror_projected(const Vec4& signs) const {
  auto project = [&](const Mat4& m) {
    Mat4 out;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) out(r, c) = (signs[r] * signs[c] > 0) ? m(r, c) : 0.0;
    return out;
  };
  return {project(A), project(B), project(Sigma)};
}

LinearMode fit_mode(std::span<const TransitionSample> samples, const FitOptions& opts) {
  const long n = static_cast<long>(samples.size());
  if (n < 8) {
    throw RankDeficiencyError("fit_mode: need at least 8 samples for the 8-column regressor, got " +
                              std::to_string(n));
  }
  std::vector<char> mask(samples.size(), 1);
  LsqResult res = solve_least_squares(samples, mask, opts);

  for (int pass = 0; opts.trim_sigma > 0 && pass < opts.trim_passes; ++pass) {
    Vec4 limits;
    for (int c = 0; c < 4; ++c) {
      limits[c] = opts.trim_sigma * std::sqrt(std::max(res.mode.Sigma(c, c), 1e-30));
    }
    long dropped = 0, kept = 0;
    std::vector<char> next = mask;
    for (size_t i = 0; i < samples.size(); ++i) {
      if (!mask[i]) continue;
      const Vec4 r = samples[i].puck_next - res.mode.A * samples[i].puck -
                     res.mode.B * samples[i].mallet;
      const bool outlier = (r.array().abs() > limits.array()).any();
      next[i] = outlier ? 0 : 1;
      outlier ? ++dropped : ++kept;
    }
    if (dropped == 0 || kept < 8) break;
    mask = std::move(next);
    res = solve_least_squares(samples, mask, opts);
  }
  return res.mode;
}

Mat2 wall_canonical_rotation(const Vec2& puck_pos, const TableGeometry& geom) {
  const double hl = geom.half_length();
  const double hw = geom.half_width();
  const double d_top = hw - puck_pos[1];
  const double d_bottom = hw + puck_pos[1];
  const double d_right = hl - puck_pos[0];
  const double d_left = hl + puck_pos[0];

  const double d_min = std::min({d_top, d_bottom, d_right, d_left});
  Mat2 Q;
  if (d_min == d_top) {
    Q = Mat2::Identity();
  } else if (d_min == d_bottom) {
    Q << 1, 0, 0, -1;
  } else if (d_min == d_right) {
    Q << 0, -1, 1, 0;
  } else {
    Q << 0, 1, -1, 0;
  }
  return Q;
}

Mat2 contact_rotation(const Vec2& puck_pos, const Vec2& mallet_pos) {
  const Vec2 d = puck_pos - mallet_pos;
  const double r = d.norm();
  if (r < 1e-9) {
    throw std::invalid_argument("contact_rotation: coincident puck and mallet centers");
  }
  const double nx = d[0] / r;
  const double ny = d[1] / r;
  Mat2 R;
  R << nx, ny, -ny, nx;  // maps the contact normal to (1, 0)
  return R;
}

Vec4 transform_state(const Mat2& Q, const Vec4& s) {
  Vec4 out;
  out.head<2>() = Q * s.head<2>();
  out.tail<2>() = Q * s.tail<2>();
  return out;
}

const LinearMode& PiecewiseModel::mode(Mode m) const {
  switch (m) {
    case Mode::Free: return free_;
    case Mode::WallContact: return wall_;
    case Mode::MalletContact: return mallet_;
  }
  throw std::logic_error("unknown mode");
}

LinearMode& PiecewiseModel::mode(Mode m) {
  return const_cast<LinearMode&>(std::as_const(*this).mode(m));
}

Mode PiecewiseModel::mode_at(const Vec4& s_p, const std::optional<Vec4>& s_m) const {
  const auto puck = sim::PuckState::from_vec(s_p);
  if (s_m) {
    return sim::classify_mode(puck, sim::MalletState::from_vec(*s_m), geom_);
  }
  return sim::wall_surface_distance(puck, geom_) <= geom_.puck_radius + 1e-3
             ? Mode::WallContact
             : Mode::Free;
}

namespace {

/// Approach tests in the canonical frames: the wall map binds while the
/// puck moves toward the wall, the mallet map while the relative velocity
/// closes the contact.
bool approaching_wall(const Vec4& s_p, const TableGeometry& geom) {
  const Mat2 Q = wall_canonical_rotation(s_p.head<2>(), geom);
  return (Q * s_p.tail<2>())[1] > 0.0;
}

bool approaching_mallet(const Vec4& s_p, const Vec4& s_m) {
  const Vec2 d = s_p.head<2>() - s_m.head<2>();
  const Vec2 rel = s_p.tail<2>() - s_m.tail<2>();
  return rel.dot(d) < 0.0;
}

}  // namespace

Mode PiecewiseModel::effective_mode(const Vec4& s_p, const std::optional<Vec4>& s_m) const {
  const Mode labelled = mode_at(s_p, s_m);
  if (labelled == Mode::MalletContact) {
    if (approaching_mallet(s_p, *s_m)) return Mode::MalletContact;
    // fall through: the puck may still be heading into a wall
    const auto puck = sim::PuckState::from_vec(s_p);
    if (sim::wall_surface_distance(puck, geom_) <= geom_.puck_radius + 1e-3 &&
        approaching_wall(s_p, geom_)) {
      return Mode::WallContact;
    }
    return Mode::Free;
  }
  if (labelled == Mode::WallContact) {
    return approaching_wall(s_p, geom_) ? Mode::WallContact : Mode::Free;
  }
  return Mode::Free;
}

Vec4 PiecewiseModel::predict_mean_with_mode(Mode m, const Vec4& s_p,
                                            const std::optional<Vec4>& s_m) const {
  const Vec4 sm = s_m.value_or(Vec4::Zero());
  switch (m) {
    case Mode::Free:
      return free_.A * s_p + free_.B * sm;
    case Mode::WallContact: {
      const Mat2 Q = wall_canonical_rotation(s_p.head<2>(), geom_);
      const Vec4 out = wall_.A * transform_state(Q, s_p) + wall_.B * transform_state(Q, sm);
      return transform_state(Q.transpose(), out);
    }
    case Mode::MalletContact: {
      if (!s_m) throw std::logic_error("mallet mode requires a mallet state");
      const Mat2 R = contact_rotation(s_p.head<2>(), s_m->head<2>());
      const Vec4 out = mallet_.A * transform_state(R, s_p) + mallet_.B * transform_state(R, sm);
      return transform_state(R.transpose(), out);
    }
  }
  throw std::logic_error("unknown mode");
}

Vec4 PiecewiseModel::predict_mean(const Vec4& s_p, const std::optional<Vec4>& s_m) const {
  return predict_mean_with_mode(effective_mode(s_p, s_m), s_p, s_m);
}

Mat4 PiecewiseModel::linearize(const Vec4& s_p, const std::optional<Vec4>& s_m) const {
  const Mode m = effective_mode(s_p, s_m);
  if (m == Mode::Free) return free_.A;
  constexpr double h = 1e-6;
  Mat4 J;
  for (int c = 0; c < 4; ++c) {
    Vec4 hi = s_p, lo = s_p;
    hi[c] += h;
    lo[c] -= h;
    J.col(c) = (predict_mean_with_mode(m, hi, s_m) - predict_mean_with_mode(m, lo, s_m)) / (2 * h);
  }
  return J;
}

Mat4 PiecewiseModel::noise_at(const Vec4& s_p, const std::optional<Vec4>& s_m) const {
  const Mode m = effective_mode(s_p, s_m);
  switch (m) {
    case Mode::Free:
      return free_.Sigma;
    case Mode::WallContact: {
      const Mat4 T = block_transform(wall_canonical_rotation(s_p.head<2>(), geom_).transpose());
      return T * wall_.Sigma * T.transpose();
    }
    case Mode::MalletContact: {
      const Mat4 T = block_transform(contact_rotation(s_p.head<2>(), s_m->head<2>()).transpose());
      return T * mallet_.Sigma * T.transpose();
    }
  }
  throw std::logic_error("unknown mode");
}

nlohmann::json PiecewiseModel::to_json() const {
  auto mode_json = [](const LinearMode& m) {
    return nlohmann::json{{"A", matrix_row_major(m.A)},
                          {"B", matrix_row_major(m.B)},
                          {"Sigma", matrix_row_major(m.Sigma)}};
  };
  return nlohmann::json{{"version", kSchemaVersion},
                        {"dt", dt_},
                        {"geometry", geom_},
                        {"modes",
                         {{"free", mode_json(free_)},
                          {"wall", mode_json(wall_)},
                          {"mallet", mode_json(mallet_)}}}};
}

PiecewiseModel PiecewiseModel::from_json(const nlohmann::json& j) {
  const std::string version = j.value("version", "");
  if (version != kSchemaVersion) {
    throw std::runtime_error("dynamics model schema mismatch: expected '" +
                             std::string(kSchemaVersion) + "', found '" + version +
                             "'; regenerate with fit-dynamics");
  }
  auto parse_mode = [&](const char* name) {
    const auto& m = j.at("modes").at(name);
    return LinearMode{matrix_from_row_major(m.at("A")), matrix_from_row_major(m.at("B")),
                      matrix_from_row_major(m.at("Sigma"))};
  };
  return PiecewiseModel(parse_mode("free"), parse_mode("wall"), parse_mode("mallet"),
                        j.at("dt").get<double>(), j.at("geometry").get<TableGeometry>());
}

namespace {

struct EpisodeState {
  sim::WorldState world;
  Vec2 command{0, 0};
};

void spawn_free(EpisodeState& ep, Rng& rng, const sim::SimParams& params, double max_speed) {
  const auto& g = params.geom;
  ep.world.puck = {uniform(rng, -(g.half_length() - 0.1), g.half_length() - 0.1),
                   uniform(rng, -(g.half_width() - 0.1), g.half_width() - 0.1), 0, 0};
  const double speed = uniform(rng, 0.2, max_speed);
  const double ang = uniform(rng, -M_PI, M_PI);
  ep.world.puck.vx = speed * std::cos(ang);
  ep.world.puck.vy = speed * std::sin(ang);
}

void place_mallet(EpisodeState& ep, Rng& rng, const sim::SimParams& params) {
  ep.world.mallet = {uniform(rng, params.mallet_x_min() + 0.05, -0.15),
                     uniform(rng, -(params.mallet_y_max() - 0.05), params.mallet_y_max() - 0.05),
                     0, 0};
}

void spawn_wall_drill(EpisodeState& ep, Rng& rng, const sim::SimParams& params) {
  const auto& g = params.geom;
  const double rp = g.puck_radius;
  const int wall = uniform_int(rng, 0, 3);
  const double v_in = uniform(rng, 0.3, 2.5);
  const double v_t = uniform(rng, -2.0, 2.0);
  switch (wall) {
    case 0:  // top
      ep.world.puck = {uniform(rng, -(g.half_length() - 0.15), g.half_length() - 0.15),
                       g.half_width() - rp, v_t, v_in};
      break;
    case 1:  // bottom
      ep.world.puck = {uniform(rng, -(g.half_length() - 0.15), g.half_length() - 0.15),
                       -(g.half_width() - rp), v_t, -v_in};
      break;
    case 2: {  // right end, outside the mouth
      const double y = uniform(rng, 0.5 * g.goal_width + 0.05, g.half_width() - 0.15);
      ep.world.puck = {g.half_length() - rp, uniform(rng, 0, 1) < 0.5 ? y : -y, v_in, v_t};
      break;
    }
    default: {  // left end
      const double y = uniform(rng, 0.5 * g.goal_width + 0.05, g.half_width() - 0.15);
      ep.world.puck = {-(g.half_length() - rp), uniform(rng, 0, 1) < 0.5 ? y : -y, -v_in, v_t};
      break;
    }
  }
}

void spawn_contact_drill(EpisodeState& ep, Rng& rng, const sim::SimParams& params) {
  const auto& g = params.geom;
  const double cd = g.contact_distance();
  ep.world.mallet = {uniform(rng, params.mallet_x_min() + 0.12, -0.25),
                     uniform(rng, -(params.mallet_y_max() - 0.12), params.mallet_y_max() - 0.12),
                     0, 0};
  Vec2 n{1, 0};
  for (int tries = 0; tries < 20; ++tries) {
    const double ang = uniform(rng, -M_PI, M_PI);
    const Vec2 cand{std::cos(ang), std::sin(ang)};
    const Vec2 p = ep.world.mallet.pos() + cd * cand;
    if (std::abs(p[0]) < g.half_length() - g.puck_radius - 1e-3 &&
        std::abs(p[1]) < g.half_width() - g.puck_radius - 1e-3) {
      n = cand;
      break;
    }
  }
  const Vec2 t{-n[1], n[0]};
  const Vec2 puck_pos = ep.world.mallet.pos() + cd * n;

  Vec2 v_p;
  if (uniform(rng, 0, 1) < 0.5) {
    v_p = Vec2{gaussian(rng, 0, 0.2), gaussian(rng, 0, 0.2)};  // near-stationary puck
  } else {
    v_p = -uniform(rng, 0.5, 2.5) * n + gaussian(rng, 0, 0.3) * t;  // incoming puck
  }
  double vm_n = uniform(rng, -1.0, 2.0);
  const double vm_t = uniform(rng, -0.5, 0.5);
  if ((v_p.dot(n) - vm_n) > -0.05) {
    vm_n = v_p.dot(n) + uniform(rng, 0.3, 2.0);  // guarantee a closing contact
  }
  const Vec2 v_m = vm_n * n + vm_t * t;

  ep.world.puck = {puck_pos[0], puck_pos[1], v_p[0], v_p[1]};
  ep.world.mallet.vx = v_m[0];
  ep.world.mallet.vy = v_m[1];
  ep.command = v_m;
}

Vec2 sweep_command(const EpisodeState& ep, Rng& rng, const sim::SimParams& params) {
  if (uniform(rng, 0, 1) < 0.5) {
    Vec2 dir = ep.world.puck.pos() - ep.world.mallet.pos();
    const double n = dir.norm();
    dir = (n > 1e-6) ? Vec2(dir / n) : Vec2{1, 0};
    const double jitter = gaussian(rng, 0, 0.3);
    const Vec2 t{-dir[1], dir[0]};
    return uniform(rng, 0.3, params.mallet_speed_cap) * (dir + jitter * t).normalized();
  }
  const double ang = uniform(rng, -M_PI, M_PI);
  return uniform(rng, 0.0, params.mallet_speed_cap) * Vec2{std::cos(ang), std::sin(ang)};
}

}  // namespace

std::vector<TransitionSample> collect_transitions(int n_episodes, const ExplorationConfig& cfg,
                                                  const sim::SimParams& params, double dt,
                                                  std::uint64_t seed) {
  if (n_episodes <= 0) throw std::invalid_argument("collect_transitions: n_episodes must be > 0");
  std::vector<TransitionSample> out;
  out.reserve(static_cast<size_t>(n_episodes) * cfg.steps_per_episode);

  for (int ep_idx = 0; ep_idx < n_episodes; ++ep_idx) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(ep_idx));
    EpisodeState ep;
    const double u = uniform(rng, 0, 1);
    if (u < cfg.free_fraction) {
      place_mallet(ep, rng, params);
      spawn_free(ep, rng, params, cfg.max_launch_speed);
      ep.command = sweep_command(ep, rng, params);
    } else if (u < cfg.free_fraction + cfg.wall_fraction) {
      place_mallet(ep, rng, params);
      spawn_wall_drill(ep, rng, params);
      ep.command = sweep_command(ep, rng, params);
    } else {
      spawn_contact_drill(ep, rng, params);
    }

    int recorded = 0;
    int steps_since_sweep = 0;
    while (recorded < cfg.steps_per_episode) {
      if (steps_since_sweep >= cfg.sweep_period) {
        ep.command = sweep_command(ep, rng, params);
        steps_since_sweep = 0;
      }
      const Mode mode = sim::classify_mode(ep.world.puck, ep.world.mallet, params.geom);
      const Vec2 applied = clamp_speed(ep.command, params.mallet_speed_cap);
      const auto next = sim::step(ep.world, sim::MalletCommand{ep.command}, dt, params);
      if (next.scored) {
        spawn_free(ep, rng, params, cfg.max_launch_speed);
        ep.world.sim_time = next.sim_time;
        ep.world.scored.reset();
        continue;
      }
      TransitionSample s;
      s.puck = ep.world.puck.as_vec();
      s.mallet << ep.world.mallet.pos(), applied;
      s.puck_next = next.puck.as_vec();
      s.mode = mode;
      out.push_back(s);
      ep.world = next;
      ++recorded;
      ++steps_since_sweep;
    }
  }
  return out;
}

PiecewiseModel fit_piecewise(std::span<const TransitionSample> samples,
                             const TableGeometry& geom, double dt,
                             const PipelineOptions& opts) {
  std::vector<TransitionSample> free_s, wall_s, mallet_s;
  for (const auto& s : samples) {
    // Separating contact samples carry free-flight dynamics; route them to
    // the free fit, mirroring the prediction-time approach rule.
    Mode routed = s.mode;
    if (routed == Mode::MalletContact && !approaching_mallet(s.puck, s.mallet)) {
      routed = Mode::Free;
    }
    if (routed == Mode::WallContact && !approaching_wall(s.puck, geom)) {
      routed = Mode::Free;
    }
    switch (routed) {
      case Mode::Free: free_s.push_back(s); break;
      case Mode::WallContact: {
        const Mat2 Q = wall_canonical_rotation(s.puck.head<2>(), geom);
        wall_s.push_back({transform_state(Q, s.puck), transform_state(Q, s.mallet),
                          transform_state(Q, s.puck_next), s.mode});
        break;
      }
      case Mode::MalletContact: {
        const Mat2 R = contact_rotation(s.puck.head<2>(), s.mallet.head<2>());
        mallet_s.push_back({transform_state(R, s.puck), transform_state(R, s.mallet),
                            transform_state(R, s.puck_next), s.mode});
        break;
      }
    }
  }

  LinearMode free_m = fit_mode(free_s, opts.fit);
  LinearMode wall_m = fit_mode(wall_s, opts.fit);
  FitOptions mallet_opts = opts.fit;
  mallet_opts.ridge = opts.mallet_ridge;
  LinearMode mallet_m = fit_mode(mallet_s, mallet_opts);

  if (opts.symmetrize) {
    free_m = free_m.mirror_projected({1, -1, 1, -1});
    wall_m = wall_m.mirror_projected({-1, 1, -1, 1});   // tangential flip, canonical wall frame
    mallet_m = mallet_m.mirror_projected({1, -1, 1, -1});  // tangential flip, contact frame
  }
  return PiecewiseModel(free_m, wall_m, mallet_m, dt, geom);
}

}  // namespace airhockey::dynamics
