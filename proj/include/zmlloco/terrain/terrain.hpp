#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "zmlloco/dynamics/ground.hpp"
#include "zmlloco/rng.hpp"
#include "zmlloco/types.hpp"

namespace zmlloco {

enum class TerrainKind { narrow_flat, narrow_slope, narrow_stairs, plane };

inline constexpr int kNumLevels = 20;
inline constexpr double kStepWidth = 0.4;

std::string to_string(TerrainKind kind);
TerrainKind terrain_kind_from_string(const std::string& name);

struct TerrainSpec {
  TerrainKind kind = TerrainKind::plane;
  int level = 0;
  double width = 1.0;
  double gradient = 0.0;
  double step_height = 0.0;
  double step_width = kStepWidth;
  double length = 22.0;
  double friction = 1.0;
};

struct TerrainOptions {
  double length = 22.0;       // path length ahead of the start
  double start_margin = 1.5;  // flat path behind the start
  double cell = 0.02;
  double drop = 1.0;          // off-path depth below the local path
  double side_margin = 0.6;   // off-path cells stored beside the path
};

// Level endpoints interpolated linearly in level / 19.
TerrainSpec terrain_spec(TerrainKind kind, int level);

// Node grid with nearest-node lookup, so step edges stay sharp. Queries
// outside the grid clamp to the border node and report off-path, except for
// unbounded fields (plane) which report on-path.
class HeightField final : public Ground {
 public:
  HeightField() = default;
  HeightField(double x0, double y0, double cell, int nx, int ny, double mu = 1.0);

  template <typename ElevationFn, typename OnPathFn>
  static HeightField from_function(double x0, double y0, double cell, int nx, int ny,
                                   ElevationFn elevation, OnPathFn on_path, double mu = 1.0) {
    HeightField hf(x0, y0, cell, nx, ny, mu);
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        const double x = hf.node_x(i), y = hf.node_y(j);
        hf.elevation_[hf.index(i, j)] = elevation(x, y);
        hf.on_path_[hf.index(i, j)] = on_path(x, y) ? 1 : 0;
      }
    return hf;
  }

  std::pair<double, bool> height_at(double x, double y) const;
  double elevation(double x, double y) const override { return height_at(x, y).first; }
  double friction() const override { return mu_; }
  void set_friction(double mu) { mu_ = mu; }

  void set_unbounded(bool v) { unbounded_ = v; }
  bool unbounded() const { return unbounded_; }

  double x0() const { return x0_; }
  double y0() const { return y0_; }
  double cell() const { return cell_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double node_x(int i) const { return x0_ + i * cell_; }
  double node_y(int j) const { return y0_ + j * cell_; }
  const std::vector<double>& grid() const { return elevation_; }

  // x,y,elevation per node.
  void write_csv(std::ostream& os) const;

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * ny_ + j; }

  double x0_ = 0.0, y0_ = 0.0, cell_ = 1.0;
  int nx_ = 1, ny_ = 1;
  double mu_ = 1.0;
  bool unbounded_ = false;
  std::vector<double> elevation_ = {0.0};
  std::vector<std::uint8_t> on_path_ = {1};
};

// Straight path along +x centered on y = 0, starting at x = 0.
HeightField make_height_field(const TerrainSpec& spec, const TerrainOptions& opt = {});

// Draws nothing for the geometry itself; the rng is consumed only for the
// friction coefficient when `friction_range` is non-degenerate.
std::pair<TerrainSpec, HeightField> generate_terrain(TerrainKind kind, int level, Rng& rng,
                                                     const TerrainOptions& opt = {},
                                                     Vec2 friction_range = Vec2(1.0, 1.0));

// 30% each narrow kind, 10% plane.
TerrainKind mix_terrains(Rng& rng);
inline constexpr std::array<double, 4> kTerrainMix = {0.3, 0.3, 0.3, 0.1};

inline constexpr int kWindowRows = 17;  // along the heading, 1.6 m
inline constexpr int kWindowCols = 11;  // lateral, 1.0 m
inline constexpr double kWindowSpacing = 0.1;
inline constexpr int kWindowSize = kWindowRows * kWindowCols;

// Elevations minus base height on a yaw-aligned grid centered on the base.
// Row-major over forward offsets -0.8..0.8, then lateral -0.5..0.5.
Eigen::Matrix<double, kWindowSize, 1> sample_height_window(const HeightField& hf,
                                                           const Vec3& base_pos,
                                                           const Quat& base_quat);

}  // namespace zmlloco
