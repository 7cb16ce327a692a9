#include "airhockey/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace airhockey {

void TableGeometry::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0; };
  if (!positive(length) || !positive(width) || !positive(goal_width) ||
      !positive(puck_radius) || !positive(mallet_radius) || !(damping_coeff >= 0)) {
    throw std::invalid_argument("TableGeometry: non-finite or non-positive dimension");
  }
  if (goal_width >= width) {
    throw std::invalid_argument("TableGeometry: goal_width must be < width");
  }
  if (puck_radius + mallet_radius >= 0.5 * width) {
    throw std::invalid_argument("TableGeometry: puck_radius + mallet_radius must be < width/2");
  }
  auto restitution_ok = [](double e) { return e > 0 && e <= 1.0; };
  if (!restitution_ok(wall_restitution) || !restitution_ok(wall_tangential_retention) ||
      !restitution_ok(mallet_restitution)) {
    throw std::invalid_argument("TableGeometry: restitutions must lie in (0, 1]");
  }
}

void to_json(nlohmann::json& j, const TableGeometry& g) {
  j = nlohmann::json{{"length", g.length},
                     {"width", g.width},
                     {"goal_width", g.goal_width},
                     {"puck_radius", g.puck_radius},
                     {"mallet_radius", g.mallet_radius},
                     {"wall_restitution", g.wall_restitution},
                     {"wall_tangential_retention", g.wall_tangential_retention},
                     {"mallet_restitution", g.mallet_restitution},
                     {"damping_coeff", g.damping_coeff}};
}

void from_json(const nlohmann::json& j, TableGeometry& g) {
  TableGeometry d;
  g.length = j.value("length", d.length);
  g.width = j.value("width", d.width);
  g.goal_width = j.value("goal_width", d.goal_width);
  g.puck_radius = j.value("puck_radius", d.puck_radius);
  g.mallet_radius = j.value("mallet_radius", d.mallet_radius);
  g.wall_restitution = j.value("wall_restitution", d.wall_restitution);
  g.wall_tangential_retention = j.value("wall_tangential_retention", d.wall_tangential_retention);
  g.mallet_restitution = j.value("mallet_restitution", d.mallet_restitution);
  g.damping_coeff = j.value("damping_coeff", d.damping_coeff);
  g.validate();
}

}  // namespace airhockey
