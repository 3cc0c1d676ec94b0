#include "hybridnav/primitives.hpp"

#include <algorithm>

namespace hybridnav {

namespace {

constexpr double kYawEps = 1e-9;

double grid_value(int k, int r, double u_max) { return (static_cast<double>(k) / r) * u_max; }

KinoState closed_form(const KinoState& start, const Vec3& u_world, double t) {
  KinoState s;
  s.p = start.p + start.v * t + 0.5 * u_world * t * t;
  s.v = start.v + u_world * t;
  s.yaw = start.yaw;
  return s;
}

}  // namespace

FrameRotation::FrameRotation(double yaw) : yaw_(wrap_angle(yaw)) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  m_ << c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0;
}

FrameRotation rotation_from_yaw(double yaw) {
  if (!std::isfinite(yaw)) throw InputError("rotation_from_yaw: yaw must be finite");
  return FrameRotation(yaw);
}

void ExpansionConfig::validate() const {
  if (resolution < 1) throw InputError("expansion resolution r must be >= 1");
  if (alpha < 0 || alpha > resolution) throw InputError("expansion alpha must be in [0, r]");
  if (!(u_max > 0.0)) throw InputError("u_max must be positive");
  if (u_max > a_max) throw InputError("u_max must not exceed a_max");
  if (!(tau > 0.0)) throw InputError("primitive duration tau must be positive");
  if (sample_count < 2) throw InputError("sample_count must be >= 2");
  if (!(v_max > 0.0)) throw InputError("v_max must be positive");
}

std::optional<double> yaw_of_displacement(const Vec3& p_start, const Vec3& p_end) {
  const double dx = p_end.x() - p_start.x();
  const double dy = p_end.y() - p_start.y();
  if (std::abs(dx) < kYawEps && std::abs(dy) < kYawEps) return std::nullopt;
  return wrap_angle(std::atan2(dy, dx));
}

KinoState propagate(const KinoState& start, const PrimitiveInput& input, double t) {
  if (input.frame == InputFrame::World) return closed_form(start, input.u, t);
  const Vec3 u_world = rotation_from_yaw(start.yaw).body_to_world(input.u);
  KinoState s = closed_form(start, u_world, t);
  s.yaw = yaw_of_displacement(start.p, s.p).value_or(start.yaw);
  return s;
}

std::vector<PrimitiveInput> terrestrial_inputs(const ExpansionConfig& cfg) {
  cfg.validate();
  const int r = cfg.resolution;
  std::vector<PrimitiveInput> out;
  out.reserve(static_cast<std::size_t>((r - cfg.alpha + 1) * (2 * r + 1)));
  for (int kx = cfg.alpha; kx <= r; ++kx)
    for (int ky = -r; ky <= r; ++ky)
      out.push_back({Vec3(grid_value(kx, r, cfg.u_max), grid_value(ky, r, cfg.u_max), 0.0),
                     InputFrame::Body, cfg.tau});
  return out;
}

std::vector<PrimitiveInput> aerial_inputs(const ExpansionConfig& cfg) {
  cfg.validate();
  const int r = cfg.resolution;
  std::vector<PrimitiveInput> out;
  out.reserve(static_cast<std::size_t>((2 * r + 1) * (2 * r + 1) * (2 * r + 1)));
  for (int kx = -r; kx <= r; ++kx)
    for (int ky = -r; ky <= r; ++ky)
      for (int kz = -r; kz <= r; ++kz)
        out.push_back({Vec3(grid_value(kx, r, cfg.u_max), grid_value(ky, r, cfg.u_max),
                            grid_value(kz, r, cfg.u_max)),
                       InputFrame::World, cfg.tau});
  return out;
}

PrimitiveInput takeoff_input(const ExpansionConfig& cfg, double target_z) {
  const double h = std::max(target_z - cfg.ground_z, 0.0);
  return {Vec3(0.0, 0.0, cfg.u_max), InputFrame::World, std::sqrt(2.0 * h / cfg.u_max)};
}

MotionPrimitive make_primitive(const KinoState& start, const PrimitiveInput& input,
                               MotionMode mode, const ExpansionConfig& cfg) {
  MotionPrimitive prim;
  prim.start = start;
  prim.input = input;
  prim.mode = mode;
  if (input.frame == InputFrame::Body) {
    const double frame_yaw = cfg.carry_yaw ? start.yaw : cfg.fixed_frame_yaw;
    prim.u_world = rotation_from_yaw(frame_yaw).body_to_world(input.u);
  } else {
    prim.u_world = input.u;
  }

  const int n = cfg.sample_count;
  const bool ground = mode == MotionMode::Terrestrial;
  prim.samples.reserve(static_cast<std::size_t>(n));
  prim.samples.push_back(start);
  for (int i = 1; i < n; ++i) {
    const double t = i == n - 1 ? input.tau : input.tau * i / (n - 1);
    KinoState s = closed_form(start, prim.u_world, t);
    if (ground) {
      s.p.z() = cfg.ground_z;
      s.v.z() = 0.0;
      if (i == n - 1) {
        // Heading over the final sub-step seeds the next expansion.
        s.yaw = yaw_of_displacement(prim.samples.back().p, s.p).value_or(start.yaw);
      } else {
        s.yaw = yaw_of_displacement(start.p, s.p).value_or(start.yaw);
      }
    }
    prim.samples.push_back(s);
  }
  prim.end = prim.samples.back();
  return prim;
}

std::vector<MotionPrimitive> terrestrial_expand(const KinoState& state,
                                                const ExpansionConfig& cfg) {
  std::vector<MotionPrimitive> out;
  for (const auto& in : terrestrial_inputs(cfg))
    out.push_back(make_primitive(state, in, MotionMode::Terrestrial, cfg));
  return out;
}

std::vector<MotionPrimitive> aerial_expand(const KinoState& state, const ExpansionConfig& cfg) {
  std::vector<MotionPrimitive> out;
  for (const auto& in : aerial_inputs(cfg))
    out.push_back(make_primitive(state, in, MotionMode::Aerial, cfg));
  return out;
}

}  // namespace hybridnav
