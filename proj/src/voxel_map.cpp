#include "hybridnav/voxel_map.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace hybridnav {

VoxelMap::VoxelMap(const Vec3& origin, double resolution, const Vec3i& dims)
    : origin_(origin), resolution_(resolution), dims_(dims) {
  if (!(resolution > 0.0) || !std::isfinite(resolution))
    throw InputError("voxel resolution must be positive");
  if ((dims.array() < 1).any()) throw InputError("voxel dims must all be >= 1");
  if (!all_finite(origin)) throw InputError("voxel map origin must be finite");
  const auto n = static_cast<std::size_t>(dims.x()) * static_cast<std::size_t>(dims.y()) *
                 static_cast<std::size_t>(dims.z());
  raw_.assign(n, 0);
  occupancy_.assign(n, 0);
}

VoxelMap VoxelMap::from_point_cloud(std::span<const Vec3> points, const Vec3& origin,
                                    double resolution, const Vec3i& dims) {
  VoxelMap map(origin, resolution, dims);
  for (const auto& p : points) {
    if (!all_finite(p)) throw InputError("point cloud contains a non-finite coordinate");
    const Vec3i idx = map.index_of(p);
    if (map.in_bounds(idx)) map.set_raw(idx);
  }
  map.occupancy_ = map.raw_;
  return map;
}

void VoxelMap::set_raw(const Vec3i& idx) { raw_[static_cast<std::size_t>(linear_index(idx))] = 1; }

VoxelMap VoxelMap::inflate(double radius) const {
  if (!(radius >= 0.0)) throw InputError("inflation radius must be non-negative");
  VoxelMap out = *this;
  const double r = std::max(radius, inflation_radius_);
  out.inflation_radius_ = r;
  out.occupancy_ = raw_;
  const int reach = static_cast<int>(std::floor(r / resolution_ + 1e-9));
  if (reach == 0) return out;

  // Center-to-center offsets inside the sphere; small slack so that r equal to
  // an exact multiple of the resolution includes that neighbor.
  std::vector<Vec3i> offsets;
  const double r2 = r * r * (1.0 + 1e-9);
  for (int dz = -reach; dz <= reach; ++dz)
    for (int dy = -reach; dy <= reach; ++dy)
      for (int dx = -reach; dx <= reach; ++dx) {
        const double d2 = resolution_ * resolution_ * (dx * dx + dy * dy + dz * dz);
        if ((dx || dy || dz) && d2 <= r2) offsets.emplace_back(dx, dy, dz);
      }

  for (int z = 0; z < dims_.z(); ++z)
    for (int y = 0; y < dims_.y(); ++y)
      for (int x = 0; x < dims_.x(); ++x) {
        const Vec3i idx(x, y, z);
        if (!raw_[static_cast<std::size_t>(linear_index(idx))]) continue;
        for (const auto& o : offsets) {
          const Vec3i n = idx + o;
          if (in_bounds(n)) out.occupancy_[static_cast<std::size_t>(linear_index(n))] = 1;
        }
      }
  return out;
}

Vec3i VoxelMap::index_of(const Vec3& p) const {
  const Vec3 s = (p - origin_) / resolution_;
  return Vec3i(static_cast<int>(std::floor(s.x())), static_cast<int>(std::floor(s.y())),
               static_cast<int>(std::floor(s.z())));
}

Vec3 VoxelMap::center_of(const Vec3i& idx) const {
  return origin_ + resolution_ * (idx.cast<double>() + Vec3::Constant(0.5));
}

bool VoxelMap::in_bounds(const Vec3i& idx) const {
  return (idx.array() >= 0).all() && (idx.array() < dims_.array()).all();
}

std::int64_t VoxelMap::linear_index(const Vec3i& idx) const {
  return static_cast<std::int64_t>(idx.x()) +
         static_cast<std::int64_t>(dims_.x()) *
             (static_cast<std::int64_t>(idx.y()) +
              static_cast<std::int64_t>(dims_.y()) * static_cast<std::int64_t>(idx.z()));
}

bool VoxelMap::occupied(const Vec3i& idx) const {
  if (!in_bounds(idx)) return true;
  return occupancy_[static_cast<std::size_t>(linear_index(idx))] != 0;
}

bool VoxelMap::is_free(const Vec3& p) const {
  if (!all_finite(p)) return false;
  return !occupied(index_of(p));
}

bool VoxelMap::segment_free(const Vec3& a, const Vec3& b, double step) const {
  if (!(step > 0.0)) throw InputError("segment sampling step must be positive");
  // Sample from the lexicographically smaller endpoint so that (a, b) and
  // (b, a) evaluate the exact same points.
  const bool swap = std::lexicographical_compare(b.data(), b.data() + 3, a.data(), a.data() + 3);
  const Vec3& from = swap ? b : a;
  const Vec3& to = swap ? a : b;
  const double len = (to - from).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
  for (int i = 0; i <= n; ++i) {
    const Vec3 p = i == n ? to : Vec3(from + (to - from) * (static_cast<double>(i) / n));
    if (!is_free(p)) return false;
  }
  return true;
}

std::size_t VoxelMap::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupancy_.begin(), occupancy_.end(), 1));
}

VoxelMap parse_map(std::istream& in, const std::string& source_name) {
  std::string line;
  int line_no = 0;
  bool have_header = false;
  Vec3 origin = Vec3::Zero();
  double resolution = 0.0;
  Vec3i dims = Vec3i::Zero();
  std::vector<Vec3> points;

  auto fail = [&](const std::string& what) {
    throw InputError(source_name + ":" + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    if (!have_header) {
      std::string k_origin, k_res, k_dims;
      if (!(ls >> k_origin >> origin.x() >> origin.y() >> origin.z() >> k_res >> resolution >>
            k_dims >> dims.x() >> dims.y() >> dims.z()))
        fail("malformed header, expected 'origin ox oy oz resolution r dims nx ny nz'");
      if (k_origin != "origin" || k_res != "resolution" || k_dims != "dims")
        fail("malformed header keywords, expected 'origin ... resolution ... dims ...'");
      std::string extra;
      if (ls >> extra) fail("unexpected trailing token '" + extra + "' in header");
      if (!(resolution > 0.0)) fail("resolution must be positive");
      if ((dims.array() < 1).any()) fail("dims must all be >= 1");
      have_header = true;
      continue;
    }
    Vec3 p;
    if (!(ls >> p.x() >> p.y() >> p.z())) fail("malformed point line, expected 'x y z'");
    std::string extra;
    if (ls >> extra) fail("unexpected trailing token '" + extra + "' in point line");
    if (!all_finite(p)) fail("non-finite point coordinate");
    points.push_back(p);
  }
  if (!have_header) throw InputError(source_name + ": missing map header");
  return VoxelMap::from_point_cloud(points, origin, resolution, dims);
}

VoxelMap load_map_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open map file: " + path.string());
  return parse_map(in, path.string());
}

}  // namespace hybridnav
