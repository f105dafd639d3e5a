#include "zmlloco/terrain/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "zmlloco/dynamics/kinematics.hpp"

namespace zmlloco {

std::string to_string(TerrainKind kind) {
  switch (kind) {
    case TerrainKind::narrow_flat: return "narrow_flat";
    case TerrainKind::narrow_slope: return "narrow_slope";
    case TerrainKind::narrow_stairs: return "narrow_stairs";
    case TerrainKind::plane: return "plane";
  }
  return "unknown";
}

TerrainKind terrain_kind_from_string(const std::string& name) {
  if (name == "narrow_flat" || name == "flat") return TerrainKind::narrow_flat;
  if (name == "narrow_slope" || name == "slope") return TerrainKind::narrow_slope;
  if (name == "narrow_stairs" || name == "stairs") return TerrainKind::narrow_stairs;
  if (name == "plane") return TerrainKind::plane;
  throw std::invalid_argument("unknown terrain kind: " + name);
}

TerrainSpec terrain_spec(TerrainKind kind, int level) {
  if (level < 0 || level >= kNumLevels) throw std::out_of_range("terrain level out of range");
  const double s = static_cast<double>(level) / (kNumLevels - 1);
  TerrainSpec t;
  t.kind = kind;
  t.level = level;
  if (kind == TerrainKind::plane) return t;
  t.width = 1.0 * (1.0 - s) + 0.2 * s;
  if (kind == TerrainKind::narrow_slope) t.gradient = 0.3 * s;
  if (kind == TerrainKind::narrow_stairs) t.step_height = 0.12 * s;
  return t;
}

HeightField::HeightField(double x0, double y0, double cell, int nx, int ny, double mu)
    : x0_(x0), y0_(y0), cell_(cell), nx_(nx), ny_(ny), mu_(mu),
      elevation_(static_cast<std::size_t>(nx) * ny, 0.0),
      on_path_(static_cast<std::size_t>(nx) * ny, 1) {
  if (!(cell > 0.0) || nx < 1 || ny < 1) throw std::invalid_argument("bad height-field grid");
}

std::pair<double, bool> HeightField::height_at(double x, double y) const {
  const double fi = std::round((x - x0_) / cell_);
  const double fj = std::round((y - y0_) / cell_);
  const bool inside = fi >= 0.0 && fi < nx_ && fj >= 0.0 && fj < ny_;
  const int i = static_cast<int>(std::clamp(fi, 0.0, nx_ - 1.0));
  const int j = static_cast<int>(std::clamp(fj, 0.0, ny_ - 1.0));
  const std::size_t k = index(i, j);
  if (inside) return {elevation_[k], on_path_[k] != 0};
  return {elevation_[k], unbounded_};
}

void HeightField::write_csv(std::ostream& os) const {
  os << "x,y,elevation\n";
  for (int i = 0; i < nx_; ++i)
    for (int j = 0; j < ny_; ++j)
      os << node_x(i) << ',' << node_y(j) << ',' << elevation_[index(i, j)] << '\n';
}

HeightField make_height_field(const TerrainSpec& spec, const TerrainOptions& opt) {
  if (spec.kind == TerrainKind::plane) {
    HeightField hf(0.0, 0.0, 1.0, 1, 1, spec.friction);
    hf.set_unbounded(true);
    return hf;
  }
  const double cell = opt.cell;
  const int back = static_cast<int>(std::ceil(opt.start_margin / cell));
  const int ahead = static_cast<int>(std::ceil(opt.length / cell));
  const double half = 0.5 * spec.width;
  const int side = static_cast<int>(std::ceil((half + opt.side_margin) / cell));
  const int cells_per_step = std::max(1, static_cast<int>(std::lround(spec.step_width / cell)));

  HeightField hf(-back * cell, -side * cell, cell, back + ahead + 1, 2 * side + 1, spec.friction);
  std::vector<double> profile(static_cast<std::size_t>(hf.nx()));
  for (int i = 0; i < hf.nx(); ++i) {
    const int k = i - back;  // node index relative to x = 0
    double h = 0.0;
    if (k > 0) {
      if (spec.kind == TerrainKind::narrow_slope) h = spec.gradient * (k * cell);
      if (spec.kind == TerrainKind::narrow_stairs) h = spec.step_height * (k / cells_per_step);
    }
    profile[static_cast<std::size_t>(i)] = h;
  }
  return HeightField::from_function(
      hf.x0(), hf.y0(), cell, hf.nx(), hf.ny(),
      [&](double x, double y) {
        const int i = static_cast<int>(std::lround((x - hf.x0()) / cell));
        const double h = profile[static_cast<std::size_t>(i)];
        return std::abs(y) <= half + 1e-9 ? h : h - opt.drop;
      },
      [&](double, double y) { return std::abs(y) <= half + 1e-9; }, spec.friction);
}

std::pair<TerrainSpec, HeightField> generate_terrain(TerrainKind kind, int level, Rng& rng,
                                                     const TerrainOptions& opt,
                                                     Vec2 friction_range) {
  TerrainSpec spec = terrain_spec(kind, level);
  spec.length = opt.length;
  if (friction_range.y() > friction_range.x())
    spec.friction = rng.uniform(friction_range.x(), friction_range.y());
  else
    spec.friction = friction_range.x();
  return {spec, make_height_field(spec, opt)};
}

TerrainKind mix_terrains(Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int k = 0; k < 3; ++k) {
    acc += kTerrainMix[static_cast<std::size_t>(k)];
    if (u < acc) return static_cast<TerrainKind>(k);
  }
  return TerrainKind::plane;
}

Eigen::Matrix<double, kWindowSize, 1> sample_height_window(const HeightField& hf,
                                                           const Vec3& base_pos,
                                                           const Quat& base_quat) {
  const double yaw = heading(base_quat);
  const double c = std::cos(yaw), s = std::sin(yaw);
  Eigen::Matrix<double, kWindowSize, 1> out;
  int k = 0;
  for (int r = 0; r < kWindowRows; ++r) {
    const double u = (r - (kWindowRows - 1) / 2) * kWindowSpacing;
    for (int col = 0; col < kWindowCols; ++col, ++k) {
      const double v = (col - (kWindowCols - 1) / 2) * kWindowSpacing;
      const double x = base_pos.x() + c * u - s * v;
      const double y = base_pos.y() + s * u + c * v;
      out[k] = hf.elevation(x, y) - base_pos.z();
    }
  }
  return out;
}

}  // namespace zmlloco
