#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rovertrack/common.hpp"

namespace rovertrack {

/// Parameters of the procedural terrain pipeline. Distances in meters.
struct TerrainParams {
  std::uint64_t seed = 0;
  double extent = 12.0;  // side of the square terrain
  int resolution = 257;  // grid nodes per side
  double base_amplitude = 0.15;
  double base_frequency = 2.0;  // cycles per extent
  int detail_octaves = 3;
  double detail_gain = 0.5;
  std::array<int, 2> crater_count_range{2, 6};
  std::array<double, 2> crater_radius_range{0.5, 1.5};
  double crater_depth_ratio = 0.15;  // bowl depth / radius
  std::array<double, 2> rim_height_range{0.02, 0.06};
  double boulder_min_spacing = 0.8;
  double boulder_density = 0.15;  // per m^2
  std::array<double, 2> boulder_radius_range{0.08, 0.2};
  double boulder_height_ratio = 0.5;  // height / radius

  /// Throws ConfigError on violated invariants.
  void validate() const;
};

struct HeightSample {
  double height = 0.0;
  bool clamped = false;  // query was outside the extent and clamped to the border
};

struct SlopeSample {
  Vec2 gradient;
  bool clamped = false;
};

/// Regular elevation grid, row-major (index = iy * resolution + ix), node
/// (ix, iy) at origin + cell_size * (ix, iy). Immutable once built.
class HeightField {
 public:
  HeightField(int resolution, double cell_size, Vec2 origin, std::vector<double> elevations);

  /// Flat field centered on the world origin.
  static HeightField flat(double extent, int resolution);

  int resolution() const { return resolution_; }
  double cell_size() const { return cell_size_; }
  Vec2 origin() const { return origin_; }
  double extent() const { return cell_size_ * (resolution_ - 1); }
  double at(int ix, int iy) const { return elevations_[static_cast<std::size_t>(iy) * resolution_ + ix]; }
  std::span<const double> elevations() const { return elevations_; }

  bool contains(Vec2 p) const;
  Vec2 clamp(Vec2 p) const;

  /// Bilinear interpolation of the four surrounding nodes.
  HeightSample sample_height(Vec2 p) const;
  /// Analytic gradient of the bilinear patch containing p.
  SlopeSample sample_slope(Vec2 p) const;

  /// FNV-1a over the little-endian bytes of the elevations.
  std::uint64_t checksum() const;
  std::size_t memory_bytes() const { return elevations_.size() * sizeof(double); }

 private:
  struct Cell {
    int ix, iy;
    double tx, ty;
    bool clamped;
  };
  Cell locate(Vec2 p) const;

  int resolution_;
  double cell_size_;
  Vec2 origin_;
  std::vector<double> elevations_;
};

struct Crater {
  Vec2 center;
  double radius = 1.0;
  double depth = 0.1;
  double rim_height = 0.03;
};

struct Boulder {
  Vec2 center;
  double radius = 0.1;
  double height = 0.05;
};

using BoulderSet = std::vector<Boulder>;

struct Terrain {
  TerrainParams params;
  HeightField field;
  std::vector<Crater> craters;
  BoulderSet boulders;
};

/// 2D gradient noise in [-1, 1]. (x, y) are scaled by frequency onto the
/// integer lattice, where the value is exactly zero. Quintic fade (C2).
double perlin2(double x, double y, double frequency, std::uint64_t seed);

/// Lattice gradient index in [0, 8) for integer cell (ix, iy).
int lattice_gradient_index(std::int64_t ix, std::int64_t iy, std::uint64_t seed);

/// Normalized fractal sum of base + detail octaves, in [-amplitude, amplitude].
double perlin_layer(double x, double y, const TerrainParams& params);

/// Radial crater profile: smoothstep bowl reaching -depth at the center plus a
/// Gaussian rim annulus around the radius; exactly zero for r >= 1.5 * radius.
double crater_profile(double r, const Crater& crater);

/// Feature points of a jittered Voronoi grid over [origin, origin + extent]^2,
/// one per cell, row-major by cell.
std::vector<Vec2> voronoi_sites(double extent, Vec2 origin, int cells_per_side, std::uint64_t seed);

/// Sum of crater profiles sampled on the grid nodes of (resolution, cell_size, origin).
std::vector<double> voronoi_crater_layer(std::span<const Crater> craters, int resolution,
                                         double cell_size, Vec2 origin);

/// Bridson-style Poisson disk sampling in [0, extent]^2. Stops when
/// floor(target_density * extent^2) points are placed or no candidate fits.
std::vector<Vec2> poisson_disk(double extent, double min_spacing, double target_density,
                               std::uint64_t seed);

/// Radial bump with height at the center and zero slope at the rim.
double boulder_profile(double r, const Boulder& boulder);

/// Full PCG pipeline; a pure function of params (including seed).
Terrain generate_terrain(const TerrainParams& params);

// Export formats.

/// Writes an 8-line text header followed by row-major little-endian float32.
void write_heightfield_binary(std::ostream& out, const HeightField& field, std::uint64_t seed);
HeightField read_heightfield_binary(std::istream& in, std::uint64_t* seed = nullptr);

/// 16-bit binary PGM, min..max elevation mapped to 0..65535 (north-up).
void write_heightfield_pgm(std::ostream& out, const HeightField& field);

}  // namespace rovertrack
