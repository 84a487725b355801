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

#include "biff/geometry.hpp"

#include <numbers>

namespace biff {

double wrap_angle(double theta) {
  constexpr double pi = std::numbers::pi;
  if (theta > -pi && theta <= pi) return theta;
  double r = std::fmod(theta + pi, 2.0 * pi);
  if (r <= 0.0) r += 2.0 * pi;
  return r - pi;
}

Vec2 to_frame(Vec2 point, const Pose2D& frame) {
  const double c = std::cos(frame.theta), s = std::sin(frame.theta);
  const double dx = point.x - frame.x, dy = point.y - frame.y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

Vec2 from_frame(Vec2 local, const Pose2D& frame) {
  const double c = std::cos(frame.theta), s = std::sin(frame.theta);
  return {frame.x + c * local.x - s * local.y, frame.y + s * local.x + c * local.y};
}

double heading_to_frame(double heading, const Pose2D& frame) {
  return wrap_angle(heading - frame.theta);
}

double heading_from_frame(double heading, const Pose2D& frame) {
  return wrap_angle(heading + frame.theta);
}

Pose2D pose_to_frame(const Pose2D& pose, const Pose2D& frame) {
  const Vec2 p = to_frame(pose.origin(), frame);
  return {p.x, p.y, pose.theta - frame.theta};
}

Pose2D pose_from_frame(const Pose2D& local, const Pose2D& frame) {
  const Vec2 p = from_frame(local.origin(), frame);
  return {p.x, p.y, local.theta + frame.theta};
}

RelPose rel_pose(const Pose2D& frame_i, const Pose2D& frame_j) {
  const Vec2 d = to_frame(frame_j.origin(), frame_i);
  const double dtheta = wrap_angle(frame_j.theta - frame_i.theta);
  return {d.x, d.y, std::cos(dtheta), std::sin(dtheta)};
}

Pose2D compose(const Pose2D& a, const Pose2D& b) { return pose_from_frame(b, a); }

Pose2D inverse(const Pose2D& p) { return pose_to_frame(Pose2D{}, p); }

Vec2 RigidTransform::apply(Vec2 p) const {
  const double c = std::cos(rotation), s = std::sin(rotation);
  return {c * p.x - s * p.y + translation.x, s * p.x + c * p.y + translation.y};
}

Vec2 RigidTransform::apply_vector(Vec2 v) const {
  const double c = std::cos(rotation), s = std::sin(rotation);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

double RigidTransform::apply_heading(double heading) const { return wrap_angle(heading + rotation); }

Pose2D RigidTransform::apply(const Pose2D& pose) const {
  const Vec2 p = apply(pose.origin());
  return {p.x, p.y, pose.theta + rotation};
}

RigidTransform RigidTransform::then(const RigidTransform& next) const {
  return {wrap_angle(rotation + next.rotation), next.apply(translation)};
}

std::vector<Vec2> apply_rigid(std::span<const Vec2> points, double rotation, Vec2 translation) {
  const RigidTransform t{rotation, translation};
  std::vector<Vec2> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(t.apply(p));
  return out;
}

}  // namespace biff
