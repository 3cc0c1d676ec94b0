#pragma once

#include "hybridnav/common.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <vector>

namespace hybridnav {

/// Dense boolean occupancy grid. Queries outside the grid report occupied.
///
/// The map keeps the raw (pre-inflation) occupancy next to the inflated one so
/// that inflation is always computed from the original obstacles: inflating
/// twice with the same radius is a no-op, and inflating with a smaller radius
/// than the current one keeps the larger shell.
class VoxelMap {
 public:
  VoxelMap(const Vec3& origin, double resolution, const Vec3i& dims);

  static VoxelMap from_point_cloud(std::span<const Vec3> points, const Vec3& origin,
                                   double resolution, const Vec3i& dims);

  /// Occupied iff the voxel center is within `radius` of a raw occupied center.
  [[nodiscard]] VoxelMap inflate(double radius) const;

  [[nodiscard]] bool is_free(const Vec3& p) const;
  [[nodiscard]] bool segment_free(const Vec3& a, const Vec3& b, double step) const;
  [[nodiscard]] bool segment_free(const Vec3& a, const Vec3& b) const {
    return segment_free(a, b, 0.5 * resolution_);
  }

  /// floor((p - origin) / resolution) per axis; no bounds check.
  [[nodiscard]] Vec3i index_of(const Vec3& p) const;
  [[nodiscard]] Vec3 center_of(const Vec3i& idx) const;
  [[nodiscard]] bool in_bounds(const Vec3i& idx) const;
  [[nodiscard]] bool contains(const Vec3& p) const { return in_bounds(index_of(p)); }
  [[nodiscard]] bool occupied(const Vec3i& idx) const;
  [[nodiscard]] std::int64_t linear_index(const Vec3i& idx) const;

  [[nodiscard]] const Vec3& origin() const { return origin_; }
  [[nodiscard]] double resolution() const { return resolution_; }
  [[nodiscard]] const Vec3i& dims() const { return dims_; }
  [[nodiscard]] double inflation_radius() const { return inflation_radius_; }
  [[nodiscard]] Vec3 upper_corner() const {
    return origin_ + resolution_ * dims_.cast<double>();
  }
  [[nodiscard]] std::size_t occupied_count() const;

 private:
  void set_raw(const Vec3i& idx);

  Vec3 origin_;
  double resolution_;
  Vec3i dims_;
  double inflation_radius_ = 0.0;
  std::vector<std::uint8_t> raw_;
  std::vector<std::uint8_t> occupancy_;
};

/// Parses the text map format:
///   origin ox oy oz resolution r dims nx ny nz
///   x y z        (one obstacle point per line)
/// Blank lines and lines starting with '#' are skipped.
VoxelMap parse_map(std::istream& in, const std::string& source_name = "<stream>");
VoxelMap load_map_file(const std::filesystem::path& path);

}  // namespace hybridnav
