// Copyright 2026 The biff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace biff {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
  double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

// Wraps an angle into (-pi, pi].
double wrap_angle(double theta);

// SE(2) frame: origin (x, y) and heading theta in (-pi, pi].
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2D() = default;
  Pose2D(double x_, double y_, double theta_) : x(x_), y(y_), theta(wrap_angle(theta_)) {}

  Vec2 origin() const { return {x, y}; }
  friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

// Pose of frame j expressed in frame i, encoded as the four positional
// encoding inputs.
struct RelPose {
  double dx = 0.0;
  double dy = 0.0;
  double cos_dtheta = 1.0;
  double sin_dtheta = 0.0;
};

// Global point -> coordinates in `frame` (rotate by -theta after translating).
Vec2 to_frame(Vec2 point, const Pose2D& frame);
Vec2 from_frame(Vec2 local, const Pose2D& frame);
double heading_to_frame(double heading, const Pose2D& frame);
double heading_from_frame(double heading, const Pose2D& frame);
// Pose expressed in another frame, and back.
Pose2D pose_to_frame(const Pose2D& pose, const Pose2D& frame);
Pose2D pose_from_frame(const Pose2D& local, const Pose2D& frame);

RelPose rel_pose(const Pose2D& frame_i, const Pose2D& frame_j);

// Group operations: compose(a, b) applies b first, then a.
Pose2D compose(const Pose2D& a, const Pose2D& b);
Pose2D inverse(const Pose2D& p);

// Global rigid motion: rotate about the origin by `rotation`, then translate.
struct RigidTransform {
  double rotation = 0.0;
  Vec2 translation;

  Vec2 apply(Vec2 p) const;
  double apply_heading(double heading) const;
  Pose2D apply(const Pose2D& pose) const;
  // Direction vectors (velocities) rotate without translating.
  Vec2 apply_vector(Vec2 v) const;
  RigidTransform then(const RigidTransform& next) const;
};

std::vector<Vec2> apply_rigid(std::span<const Vec2> points, double rotation, Vec2 translation);

}  // namespace biff
