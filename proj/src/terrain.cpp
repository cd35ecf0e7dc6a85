#include "rovertrack/terrain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "rovertrack/rng.hpp"

namespace rovertrack {

namespace {

constexpr double kGradients[8][2] = {{1, 1}, {-1, 1}, {1, -1}, {-1, -1},
                                     {1, 0}, {-1, 0}, {0, 1},  {0, -1}};

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }
double lerp(double a, double b, double t) { return a + t * (b - a); }

double smoothstep(double edge0, double edge1, double x) {
  const double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

void check_range(const char* name, double lo, double hi) {
  if (!(lo <= hi)) throw ConfigError(std::string("terrain: ") + name + " has min > max");
}

void put_u64_le(std::uint64_t v, unsigned char* out) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>(v >> (8 * i));
}

}  // namespace

void TerrainParams::validate() const {
  if (!(extent > 0.0)) throw ConfigError("terrain: extent must be > 0");
  if (resolution < 2) throw ConfigError("terrain: resolution must be >= 2");
  if (!(boulder_min_spacing > 0.0)) throw ConfigError("terrain: boulder_min_spacing must be > 0");
  if (!(base_frequency > 0.0)) throw ConfigError("terrain: base_frequency must be > 0");
  if (detail_octaves < 0) throw ConfigError("terrain: detail_octaves must be >= 0");
  if (base_amplitude < 0.0 || detail_gain < 0.0 || boulder_density < 0.0 ||
      crater_depth_ratio < 0.0 || boulder_height_ratio < 0.0)
    throw ConfigError("terrain: amplitudes, gains, ratios and densities must be >= 0");
  if (crater_count_range[0] < 0) throw ConfigError("terrain: crater count must be >= 0");
  check_range("crater_count_range", crater_count_range[0], crater_count_range[1]);
  check_range("crater_radius_range", crater_radius_range[0], crater_radius_range[1]);
  check_range("rim_height_range", rim_height_range[0], rim_height_range[1]);
  check_range("boulder_radius_range", boulder_radius_range[0], boulder_radius_range[1]);
  if (crater_count_range[1] > 0 && !(crater_radius_range[0] > 0.0))
    throw ConfigError("terrain: crater radii must be > 0");
  if (boulder_density > 0.0 && !(boulder_radius_range[0] > 0.0))
    throw ConfigError("terrain: boulder radii must be > 0");
}

// ---------------------------------------------------------------------------
// HeightField

HeightField::HeightField(int resolution, double cell_size, Vec2 origin, std::vector<double> elevations)
    : resolution_(resolution), cell_size_(cell_size), origin_(origin), elevations_(std::move(elevations)) {
  if (resolution_ < 2) throw ConfigError("heightfield: resolution must be >= 2");
  if (!(cell_size_ > 0.0)) throw ConfigError("heightfield: cell size must be > 0");
  if (elevations_.size() != static_cast<std::size_t>(resolution_) * resolution_)
    throw ConfigError("heightfield: elevation count does not match resolution");
  for (double e : elevations_)
    if (!std::isfinite(e)) throw ConfigError("heightfield: non-finite elevation");
}

HeightField HeightField::flat(double extent, int resolution) {
  const double cell = extent / (resolution - 1);
  return HeightField(resolution, cell, {-0.5 * extent, -0.5 * extent},
                     std::vector<double>(static_cast<std::size_t>(resolution) * resolution, 0.0));
}

bool HeightField::contains(Vec2 p) const {
  const double e = extent();
  return p.x >= origin_.x && p.y >= origin_.y && p.x <= origin_.x + e && p.y <= origin_.y + e;
}

Vec2 HeightField::clamp(Vec2 p) const {
  const double e = extent();
  return {std::clamp(p.x, origin_.x, origin_.x + e), std::clamp(p.y, origin_.y, origin_.y + e)};
}

HeightField::Cell HeightField::locate(Vec2 p) const {
  const double max_index = resolution_ - 1;
  double lx = (p.x - origin_.x) / cell_size_;
  double ly = (p.y - origin_.y) / cell_size_;
  const bool clamped = !(lx >= 0.0 && ly >= 0.0 && lx <= max_index && ly <= max_index);
  lx = std::clamp(std::isfinite(lx) ? lx : 0.0, 0.0, max_index);
  ly = std::clamp(std::isfinite(ly) ? ly : 0.0, 0.0, max_index);
  const int ix = std::min(static_cast<int>(std::floor(lx)), resolution_ - 2);
  const int iy = std::min(static_cast<int>(std::floor(ly)), resolution_ - 2);
  return {ix, iy, lx - ix, ly - iy, clamped};
}

HeightSample HeightField::sample_height(Vec2 p) const {
  const Cell c = locate(p);
  const double h00 = at(c.ix, c.iy), h10 = at(c.ix + 1, c.iy);
  const double h01 = at(c.ix, c.iy + 1), h11 = at(c.ix + 1, c.iy + 1);
  const double h = h00 * (1.0 - c.tx) * (1.0 - c.ty) + h10 * c.tx * (1.0 - c.ty) +
                   h01 * (1.0 - c.tx) * c.ty + h11 * c.tx * c.ty;
  return {h, c.clamped};
}

SlopeSample HeightField::sample_slope(Vec2 p) const {
  const Cell c = locate(p);
  const double h00 = at(c.ix, c.iy), h10 = at(c.ix + 1, c.iy);
  const double h01 = at(c.ix, c.iy + 1), h11 = at(c.ix + 1, c.iy + 1);
  const double gx = ((1.0 - c.ty) * (h10 - h00) + c.ty * (h11 - h01)) / cell_size_;
  const double gy = ((1.0 - c.tx) * (h01 - h00) + c.tx * (h11 - h10)) / cell_size_;
  return {{gx, gy}, c.clamped};
}

std::uint64_t HeightField::checksum() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  unsigned char bytes[8];
  for (double e : elevations_) {
    put_u64_le(std::bit_cast<std::uint64_t>(e), bytes);
    h = fnv1a64(bytes, 8, h);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Noise layers

int lattice_gradient_index(std::int64_t ix, std::int64_t iy, std::uint64_t seed) {
  const std::uint64_t hy = mix64(static_cast<std::uint64_t>(iy) + 0x632BE59BD9B4E019ULL);
  const std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(ix) ^ hy));
  return static_cast<int>(h >> 61);
}

double perlin2(double x, double y, double frequency, std::uint64_t seed) {
  const double px = x * frequency;
  const double py = y * frequency;
  const double fx = std::floor(px);
  const double fy = std::floor(py);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const double dx = px - fx;
  const double dy = py - fy;

  auto corner = [&](std::int64_t cx, std::int64_t cy, double ox, double oy) {
    const double* g = kGradients[lattice_gradient_index(cx, cy, seed)];
    return g[0] * ox + g[1] * oy;
  };
  const double n00 = corner(ix, iy, dx, dy);
  const double n10 = corner(ix + 1, iy, dx - 1.0, dy);
  const double n01 = corner(ix, iy + 1, dx, dy - 1.0);
  const double n11 = corner(ix + 1, iy + 1, dx - 1.0, dy - 1.0);
  const double u = fade(dx);
  const double v = fade(dy);
  return lerp(lerp(n00, n10, u), lerp(n01, n11, u), v);
}

double perlin_layer(double x, double y, const TerrainParams& params) {
  double sum = 0.0;
  double weight_sum = 0.0;
  double weight = 1.0;
  double frequency = params.base_frequency / params.extent;
  for (int k = 0; k <= params.detail_octaves; ++k) {
    const std::uint64_t octave_seed =
        stream_key({params.seed, tag(Stream::kTerrain), static_cast<std::uint64_t>(k)});
    sum += weight * perlin2(x, y, frequency, octave_seed);
    weight_sum += weight;
    weight *= params.detail_gain;
    frequency *= 2.0;
  }
  return weight_sum > 0.0 ? params.base_amplitude * sum / weight_sum : 0.0;
}

double crater_profile(double r, const Crater& crater) {
  const double R = crater.radius;
  if (r >= 1.5 * R) return 0.0;
  const double bowl = -crater.depth * (1.0 - smoothstep(0.0, R, r));
  const double w = 0.2 * R;
  const double z = (r - R) / w;
  const double window = smoothstep(0.5 * R, 0.8 * R, r) * (1.0 - smoothstep(1.2 * R, 1.5 * R, r));
  return bowl + crater.rim_height * std::exp(-z * z) * window;
}

std::vector<Vec2> voronoi_sites(double extent, Vec2 origin, int cells_per_side, std::uint64_t seed) {
  CounterRng rng(seed);
  const double cell = extent / cells_per_side;
  std::vector<Vec2> sites;
  sites.reserve(static_cast<std::size_t>(cells_per_side) * cells_per_side);
  for (int j = 0; j < cells_per_side; ++j) {
    for (int i = 0; i < cells_per_side; ++i) {
      const double jx = 0.1 + 0.8 * rng.uniform();
      const double jy = 0.1 + 0.8 * rng.uniform();
      sites.push_back({origin.x + cell * (i + jx), origin.y + cell * (j + jy)});
    }
  }
  return sites;
}

std::vector<double> voronoi_crater_layer(std::span<const Crater> craters, int resolution,
                                         double cell_size, Vec2 origin) {
  std::vector<double> field(static_cast<std::size_t>(resolution) * resolution, 0.0);
  for (const Crater& c : craters) {
    if (!(c.radius > 0.0)) throw ConfigError("crater radius must be > 0");
    const double reach = 1.5 * c.radius;
    const int x0 = std::max(0, static_cast<int>(std::floor((c.center.x - reach - origin.x) / cell_size)));
    const int x1 = std::min(resolution - 1, static_cast<int>(std::ceil((c.center.x + reach - origin.x) / cell_size)));
    const int y0 = std::max(0, static_cast<int>(std::floor((c.center.y - reach - origin.y) / cell_size)));
    const int y1 = std::min(resolution - 1, static_cast<int>(std::ceil((c.center.y + reach - origin.y) / cell_size)));
    for (int iy = y0; iy <= y1; ++iy) {
      for (int ix = x0; ix <= x1; ++ix) {
        const Vec2 p{origin.x + cell_size * ix, origin.y + cell_size * iy};
        field[static_cast<std::size_t>(iy) * resolution + ix] += crater_profile((p - c.center).norm(), c);
      }
    }
  }
  return field;
}

std::vector<Vec2> poisson_disk(double extent, double min_spacing, double target_density,
                               std::uint64_t seed) {
  if (!(min_spacing > 0.0)) throw ConfigError("poisson_disk: min_spacing must be > 0");
  if (!(extent > 0.0)) throw ConfigError("poisson_disk: extent must be > 0");
  const double wanted = std::floor(std::max(0.0, target_density) * extent * extent);
  if (wanted < 1.0) return {};
  const auto target = static_cast<std::size_t>(std::min(wanted, 1e7));

  constexpr int kCandidates = 30;
  const double r2 = min_spacing * min_spacing;
  const double cell = min_spacing / std::sqrt(2.0);
  const int grid_w = std::max(1, static_cast<int>(std::ceil(extent / cell)));
  std::vector<int> grid(static_cast<std::size_t>(grid_w) * grid_w, -1);
  auto cell_of = [&](double v) { return std::clamp(static_cast<int>(v / cell), 0, grid_w - 1); };

  std::vector<Vec2> points;
  std::vector<std::size_t> active;
  CounterRng rng(seed);

  auto insert = [&](Vec2 p) {
    grid[static_cast<std::size_t>(cell_of(p.y)) * grid_w + cell_of(p.x)] = static_cast<int>(points.size());
    active.push_back(points.size());
    points.push_back(p);
  };
  auto fits = [&](Vec2 p) {
    const int cx = cell_of(p.x), cy = cell_of(p.y);
    for (int y = std::max(0, cy - 2); y <= std::min(grid_w - 1, cy + 2); ++y) {
      for (int x = std::max(0, cx - 2); x <= std::min(grid_w - 1, cx + 2); ++x) {
        const int idx = grid[static_cast<std::size_t>(y) * grid_w + x];
        if (idx >= 0 && (points[idx] - p).squared_norm() < r2) return false;
      }
    }
    return true;
  };

  insert({rng.uniform() * extent, rng.uniform() * extent});
  while (!active.empty() && points.size() < target) {
    const auto slot = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(active.size()) - 1));
    const Vec2 base = points[active[slot]];
    bool placed = false;
    for (int k = 0; k < kCandidates && !placed; ++k) {
      Vec2 d;
      double d2;
      do {  // uniform in the annulus [r, 2r] by rejection from the bounding square
        d = {rng.uniform(-2.0, 2.0) * min_spacing, rng.uniform(-2.0, 2.0) * min_spacing};
        d2 = d.squared_norm();
      } while (d2 < r2 || d2 > 4.0 * r2);
      const Vec2 c = base + d;
      if (c.x < 0.0 || c.y < 0.0 || c.x > extent || c.y > extent) continue;
      if (fits(c)) {
        insert(c);
        placed = true;
      }
    }
    if (!placed) {
      active[slot] = active.back();
      active.pop_back();
    }
  }
  return points;
}

double boulder_profile(double r, const Boulder& boulder) {
  if (r >= boulder.radius) return 0.0;
  const double q = 1.0 - (r * r) / (boulder.radius * boulder.radius);
  return boulder.height * q * q;
}

Terrain generate_terrain(const TerrainParams& params) {
  params.validate();
  const int res = params.resolution;
  const double cell = params.extent / (res - 1);
  const Vec2 origin{-0.5 * params.extent, -0.5 * params.extent};

  std::vector<double> elev(static_cast<std::size_t>(res) * res);
  for (int iy = 0; iy < res; ++iy)
    for (int ix = 0; ix < res; ++ix)
      elev[static_cast<std::size_t>(iy) * res + ix] =
          perlin_layer(origin.x + cell * ix, origin.y + cell * iy, params);

  // Craters sit on a subset of Voronoi feature points of the inner 80% of the terrain.
  std::vector<Crater> craters;
  if (params.crater_count_range[1] > 0) {
    CounterRng rng(stream_key({params.seed, tag(Stream::kCraters)}));
    const int max_count = params.crater_count_range[1];
    const int cells = std::max(2, static_cast<int>(std::ceil(std::sqrt(2.0 * max_count))));
    const double inner = 0.8 * params.extent;
    std::vector<Vec2> sites = voronoi_sites(inner, {-0.5 * inner, -0.5 * inner}, cells,
                                            stream_key({params.seed, tag(Stream::kCraters), 1}));
    const auto count = static_cast<std::size_t>(
        rng.uniform_int(params.crater_count_range[0], params.crater_count_range[1]));
    for (std::size_t i = 0; i < count && i < sites.size(); ++i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i),
                                                              static_cast<std::int64_t>(sites.size()) - 1));
      std::swap(sites[i], sites[j]);
      Crater c;
      c.center = sites[i];
      c.radius = rng.uniform(params.crater_radius_range[0], params.crater_radius_range[1]);
      c.depth = params.crater_depth_ratio * c.radius;
      c.rim_height = rng.uniform(params.rim_height_range[0], params.rim_height_range[1]);
      craters.push_back(c);
    }
    const std::vector<double> layer = voronoi_crater_layer(craters, res, cell, origin);
    for (std::size_t i = 0; i < elev.size(); ++i) elev[i] += layer[i];
  }

  BoulderSet boulders;
  if (params.boulder_density > 0.0) {
    const std::vector<Vec2> points =
        poisson_disk(params.extent, params.boulder_min_spacing, params.boulder_density,
                     stream_key({params.seed, tag(Stream::kBoulders)}));
    CounterRng rng(stream_key({params.seed, tag(Stream::kBoulders), 1}));
    for (const Vec2& p : points) {
      Boulder b;
      b.center = p + origin;
      b.radius = rng.uniform(params.boulder_radius_range[0], params.boulder_radius_range[1]);
      b.height = params.boulder_height_ratio * b.radius;
      boulders.push_back(b);
      const int x0 = std::max(0, static_cast<int>(std::floor((b.center.x - b.radius - origin.x) / cell)));
      const int x1 = std::min(res - 1, static_cast<int>(std::ceil((b.center.x + b.radius - origin.x) / cell)));
      const int y0 = std::max(0, static_cast<int>(std::floor((b.center.y - b.radius - origin.y) / cell)));
      const int y1 = std::min(res - 1, static_cast<int>(std::ceil((b.center.y + b.radius - origin.y) / cell)));
      for (int iy = y0; iy <= y1; ++iy)
        for (int ix = x0; ix <= x1; ++ix) {
          const Vec2 q{origin.x + cell * ix, origin.y + cell * iy};
          elev[static_cast<std::size_t>(iy) * res + ix] += boulder_profile((q - b.center).norm(), b);
        }
    }
  }

  return Terrain{params, HeightField(res, cell, origin, std::move(elev)), std::move(craters), std::move(boulders)};
}

// ---------------------------------------------------------------------------
// IO

void write_heightfield_binary(std::ostream& out, const HeightField& field, std::uint64_t seed) {
  std::ostringstream header;
  header.precision(17);
  header << "rovertrack-heightfield\n"
         << "version 1\n"
         << "extent " << field.extent() << "\n"
         << "resolution " << field.resolution() << "\n"
         << "seed " << seed << "\n"
         << "cell_size " << field.cell_size() << "\n"
         << "origin " << field.origin().x << " " << field.origin().y << "\n"
         << "data float32-le row-major\n";
  out << header.str();
  for (double e : field.elevations()) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(e));
    const unsigned char b[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                                static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
  }
}

HeightField read_heightfield_binary(std::istream& in, std::uint64_t* seed) {
  std::string line;
  auto expect_line = [&](const char* key) {
    if (!std::getline(in, line)) throw ConfigError("heightfield file: truncated header");
    std::istringstream ls(line);
    std::string k;
    ls >> k;
    if (k != key) throw ConfigError(std::string("heightfield file: expected '") + key + "', got '" + k + "'");
    return std::string(line.begin() + static_cast<std::ptrdiff_t>(k.size()), line.end());
  };
  if (!std::getline(in, line) || line != "rovertrack-heightfield")
    throw ConfigError("heightfield file: bad magic line");
  if (std::stoi(expect_line("version")) != 1) throw ConfigError("heightfield file: unsupported version");
  expect_line("extent");
  const int res = std::stoi(expect_line("resolution"));
  const std::uint64_t file_seed = std::stoull(expect_line("seed"));
  const double cell = std::stod(expect_line("cell_size"));
  std::istringstream os(expect_line("origin"));
  Vec2 origin;
  os >> origin.x >> origin.y;
  expect_line("data");
  if (res < 2 || res > 65536) throw ConfigError("heightfield file: bad resolution");
  std::vector<double> elev(static_cast<std::size_t>(res) * res);
  for (double& e : elev) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw ConfigError("heightfield file: truncated data");
    const std::uint32_t bits = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    e = std::bit_cast<float>(bits);
  }
  if (seed) *seed = file_seed;
  return HeightField(res, cell, origin, std::move(elev));
}

void write_heightfield_pgm(std::ostream& out, const HeightField& field) {
  const auto elev = field.elevations();
  const auto [lo_it, hi_it] = std::minmax_element(elev.begin(), elev.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  const int res = field.resolution();
  out << "P5\n" << res << " " << res << "\n65535\n";
  for (int iy = res - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < res; ++ix) {
      const double t = span > 0.0 ? (field.at(ix, iy) - lo) / span : 0.0;
      const auto v = static_cast<std::uint16_t>(std::lround(t * 65535.0));
      const char b[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xFF)};
      out.write(b, 2);
    }
  }
}

}  // namespace rovertrack
