#pragma once

#include "hybridnav/common.hpp"

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace hybridnav {

/// Position, velocity and yaw in the world frame.
struct KinoState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  double yaw = 0.0;  // (-pi, pi]
};

/// Planar world-to-body rotation about z for a given yaw.
class FrameRotation {
 public:
  explicit FrameRotation(double yaw);

  [[nodiscard]] Vec3 world_to_body(const Vec3& w) const { return m_ * w; }
  [[nodiscard]] Vec3 body_to_world(const Vec3& b) const { return m_.transpose() * b; }
  [[nodiscard]] const Eigen::Matrix3d& matrix() const { return m_; }
  [[nodiscard]] double yaw() const { return yaw_; }

 private:
  double yaw_;
  Eigen::Matrix3d m_;
};

FrameRotation rotation_from_yaw(double yaw);

enum class InputFrame { Body, World };
enum class MotionMode { Terrestrial, Aerial };

/// Constant acceleration held for `tau` seconds.
struct PrimitiveInput {
  Vec3 u = Vec3::Zero();
  InputFrame frame = InputFrame::World;
  double tau = 0.0;
};

struct MotionPrimitive {
  KinoState start;
  PrimitiveInput input;
  KinoState end;
  std::vector<KinoState> samples;  // samples.front() == start, samples.back() == end
  MotionMode mode = MotionMode::Terrestrial;
  Vec3 u_world = Vec3::Zero();  // the input resolved into the world frame
};

struct ExpansionConfig {
  double u_max = 0.8;      // per-axis input bound (m/s^2)
  int resolution = 2;      // r
  int alpha = 1;           // lower bound index on body-x input, 0 <= alpha <= r
  double tau = 0.5;        // primitive duration (s)
  int sample_count = 10;   // samples per primitive, endpoints included
  double v_max = 1.0;      // m/s
  double a_max = 0.8;      // m/s^2
  double ground_z = 0.0;
  /// When false, terrestrial inputs are expressed in `fixed_frame_yaw` instead
  /// of the yaw carried from the previous primitive (yaw-unconstrained baseline).
  bool carry_yaw = true;
  double fixed_frame_yaw = 0.0;

  void validate() const;
};

/// Four-quadrant heading of the horizontal displacement; nullopt when both
/// |dx| and |dy| are below 1e-9 m (callers keep the previous yaw).
std::optional<double> yaw_of_displacement(const Vec3& p_start, const Vec3& p_end);

/// Exact double-integrator solution at offset t from `start`. Terrestrial
/// (body-tagged) inputs take their yaw from the displacement against `start`;
/// world-tagged inputs carry the start yaw.
KinoState propagate(const KinoState& start, const PrimitiveInput& input, double t);

std::vector<PrimitiveInput> terrestrial_inputs(const ExpansionConfig& cfg);
std::vector<PrimitiveInput> aerial_inputs(const ExpansionConfig& cfg);

/// Vertical lift-off input reaching `target_z` from a ground state at rest in z.
PrimitiveInput takeoff_input(const ExpansionConfig& cfg, double target_z);

MotionPrimitive make_primitive(const KinoState& start, const PrimitiveInput& input,
                               MotionMode mode, const ExpansionConfig& cfg);

std::vector<MotionPrimitive> terrestrial_expand(const KinoState& state,
                                                const ExpansionConfig& cfg);
std::vector<MotionPrimitive> aerial_expand(const KinoState& state, const ExpansionConfig& cfg);

}  // namespace hybridnav
