#include "worldwalk/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <numbers>

#include "worldwalk/error.hpp"

namespace worldwalk {

namespace {

constexpr double kSlerpLinearThreshold = 1e-8;

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

Mat3 Mat3::operator*(const Mat3& o) const {
  Mat3 r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      r(i, j) = (*this)(i, 0) * o(0, j) + (*this)(i, 1) * o(1, j) + (*this)(i, 2) * o(2, j);
    }
  }
  return r;
}

Mat3 Mat3::transposed() const {
  Mat3 r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
  }
  return r;
}

double Mat3::determinant() const {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw InvalidArgument("intrinsics: focal lengths must be positive and finite");
  }
  if (width <= 0 || height <= 0) throw InvalidArgument("intrinsics: image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw InvalidArgument("intrinsics: principal point outside the image");
  }
}

CameraIntrinsics CameraIntrinsics::centered(int width, int height, double focal) {
  CameraIntrinsics k{focal, focal, (width - 1) / 2.0, (height - 1) / 2.0, width, height};
  k.validate();
  return k;
}

// ---------------------------------------------------------------------------

Rotation Rotation::from_quaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!std::isfinite(n) || n < 1e-300) throw InvalidArgument("rotation: degenerate quaternion");
  return Rotation(w / n, x / n, y / n, z / n);
}

Rotation Rotation::from_matrix(const Mat3& m) {
  const Mat3 should_be_identity = m * m.transposed();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (std::abs(should_be_identity(i, j) - (i == j ? 1.0 : 0.0)) > 1e-6) {
        throw InvalidArgument("rotation: matrix is not orthonormal");
      }
    }
  }
  if (std::abs(m.determinant() - 1.0) > 1e-6) throw InvalidArgument("rotation: det != +1");

  // Shepperd's method: pivot on the largest diagonal term.
  const double trace = m(0, 0) + m(1, 1) + m(2, 2);
  double w, x, y, z;
  if (trace > 0.0) {
    const double s = std::sqrt(trace + 1.0) * 2.0;
    w = 0.25 * s;
    x = (m(2, 1) - m(1, 2)) / s;
    y = (m(0, 2) - m(2, 0)) / s;
    z = (m(1, 0) - m(0, 1)) / s;
  } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
    const double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2.0;
    w = (m(2, 1) - m(1, 2)) / s;
    x = 0.25 * s;
    y = (m(0, 1) + m(1, 0)) / s;
    z = (m(0, 2) + m(2, 0)) / s;
  } else if (m(1, 1) > m(2, 2)) {
    const double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2.0;
    w = (m(0, 2) - m(2, 0)) / s;
    x = (m(0, 1) + m(1, 0)) / s;
    y = 0.25 * s;
    z = (m(1, 2) + m(2, 1)) / s;
  } else {
    const double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2.0;
    w = (m(1, 0) - m(0, 1)) / s;
    x = (m(0, 2) + m(2, 0)) / s;
    y = (m(1, 2) + m(2, 1)) / s;
    z = 0.25 * s;
  }
  return from_quaternion(w, x, y, z);
}

Mat3 Rotation::matrix() const {
  const double xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
  const double xy = x_ * y_, xz = x_ * z_, yz = y_ * z_;
  const double wx = w_ * x_, wy = w_ * y_, wz = w_ * z_;
  Mat3 r;
  r.m = {1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz),       2.0 * (xz + wy),
         2.0 * (xy + wz),       1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx),
         2.0 * (xz - wy),       2.0 * (yz + wx),       1.0 - 2.0 * (xx + yy)};
  return r;
}

Rotation Rotation::operator*(const Rotation& o) const {
  return from_quaternion(w_ * o.w_ - x_ * o.x_ - y_ * o.y_ - z_ * o.z_,
                         w_ * o.x_ + x_ * o.w_ + y_ * o.z_ - z_ * o.y_,
                         w_ * o.y_ - x_ * o.z_ + y_ * o.w_ + z_ * o.x_,
                         w_ * o.z_ + x_ * o.y_ - y_ * o.x_ + z_ * o.w_);
}

Rotation Rotation::inverse() const { return Rotation(w_, -x_, -y_, -z_); }

double Rotation::angle_to(const Rotation& other) const {
  // 2 * atan2(|a - b|, |a + b|) with the sign chosen for the shorter arc;
  // stable for tiny and near-pi angles alike.
  const double sign = dot(other) < 0.0 ? -1.0 : 1.0;
  const double dw = w_ - sign * other.w_, dx = x_ - sign * other.x_;
  const double dy = y_ - sign * other.y_, dz = z_ - sign * other.z_;
  const double sw = w_ + sign * other.w_, sx = x_ + sign * other.x_;
  const double sy = y_ + sign * other.y_, sz = z_ + sign * other.z_;
  const double diff = std::sqrt(dw * dw + dx * dx + dy * dy + dz * dz);
  const double sum = std::sqrt(sw * sw + sx * sx + sy * sy + sz * sz);
  return 4.0 * std::atan2(diff, sum);
}

CameraPose CameraPose::inverse() const {
  const Rotation inv = rotation.inverse();
  return {inv, -(inv.rotate(translation))};
}

CameraPose CameraPose::compose(const CameraPose& other) const {
  return {rotation * other.rotation, rotation.rotate(other.translation) + translation};
}

Vec3 camera_to_world(const CameraPose& pose, const Vec3& point_camera) {
  return pose.rotation.matrix() * point_camera + pose.translation;
}

Vec3 world_to_camera(const CameraPose& pose, const Vec3& point_world) {
  return pose.rotation.matrix().transposed() * (point_world - pose.translation);
}

Vec3 forward_vector(const CameraPose& pose) {
  const Mat3 r = pose.rotation.matrix();
  return {-r(0, 2), -r(1, 2), -r(2, 2)};
}

Rotation rotation_y(double theta_deg) {
  const double half = deg_to_rad(theta_deg) / 2.0;
  return Rotation::from_quaternion(std::cos(half), 0.0, std::sin(half), 0.0);
}

Rotation slerp(const Rotation& a, const Rotation& b, double u) {
  double bw = b.w(), bx = b.x(), by = b.y(), bz = b.z();
  if (a.dot(b) < 0.0) {
    bw = -bw;
    bx = -bx;
    by = -by;
    bz = -bz;
  }
  const double dw = a.w() - bw, dx = a.x() - bx, dy = a.y() - by, dz = a.z() - bz;
  const double sw = a.w() + bw, sx = a.x() + bx, sy = a.y() + by, sz = a.z() + bz;
  // Half of the rotation angle between a and b.
  const double omega = 2.0 * std::atan2(std::sqrt(dw * dw + dx * dx + dy * dy + dz * dz),
                                        std::sqrt(sw * sw + sx * sx + sy * sy + sz * sz));
  double wa, wb;
  if (2.0 * omega < kSlerpLinearThreshold) {
    wa = 1.0 - u;
    wb = u;
  } else {
    const double s = std::sin(omega);
    wa = std::sin((1.0 - u) * omega) / s;
    wb = std::sin(u * omega) / s;
  }
  return Rotation::from_quaternion(wa * a.w() + wb * bw, wa * a.x() + wb * bx,
                                   wa * a.y() + wb * by, wa * a.z() + wb * bz);
}

// ---------------------------------------------------------------------------

KeySet KeySet::parse(std::string_view text) {
  KeySet keys;
  std::string upper;
  upper.reserve(text.size());
  for (char c : text) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (upper == "IDLE") return keys;
  for (char c : upper) {
    switch (c) {
      case 'W': keys.bits_ |= static_cast<std::uint8_t>(Key::W); break;
      case 'A': keys.bits_ |= static_cast<std::uint8_t>(Key::A); break;
      case 'S': keys.bits_ |= static_cast<std::uint8_t>(Key::S); break;
      case 'D': keys.bits_ |= static_cast<std::uint8_t>(Key::D); break;
      default: throw InvalidArgument(std::string("keys: unexpected character '") + c + "'");
    }
  }
  return keys;
}

std::string KeySet::str() const {
  std::string s;
  if (has(Key::W)) s += 'W';
  if (has(Key::A)) s += 'A';
  if (has(Key::S)) s += 'S';
  if (has(Key::D)) s += 'D';
  return s;
}

void ActionParams::validate_motion() const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw InvalidArgument("action: eta must be >= 0");
  if (!(theta_deg >= 0.0 && theta_deg <= 180.0)) {
    throw InvalidArgument("action: theta must lie in [0, 180] degrees");
  }
  if (frames < 1) throw InvalidArgument("action: frames must be >= 1");
}

void ActionParams::validate() const {
  validate_motion();
  if (frames < 2 || frames % 4 != 1) {
    throw InvalidArgument("action: frames must be >= 2 and congruent to 1 mod 4");
  }
}

Trajectory action_to_trajectory(const Action& action, const CameraPose& initial) {
  const ActionParams& p = action.params;
  p.validate_motion();
  if (!initial.translation.finite()) throw InvalidArgument("trajectory: non-finite initial pose");

  int rot_sign = 0;
  if (action.keys.has(Key::A)) rot_sign += 1;
  if (action.keys.has(Key::D)) rot_sign -= 1;
  int move_sign = 0;
  if (action.keys.has(Key::W)) move_sign += 1;
  if (action.keys.has(Key::S)) move_sign -= 1;

  const Rotation start = initial.rotation;
  const Rotation target = start * rotation_y(rot_sign * p.theta_deg);

  Trajectory traj;
  traj.poses.reserve(static_cast<std::size_t>(p.frames) + 1);
  traj.poses.push_back(initial);
  for (int k = 1; k <= p.frames; ++k) {
    CameraPose pose;
    pose.rotation = rot_sign == 0 ? start : slerp(start, target, static_cast<double>(k) / p.frames);
    pose.translation = traj.poses.back().translation;
    if (move_sign != 0) {
      pose.translation = pose.translation + forward_vector(pose) * (move_sign * p.eta);
    }
    traj.poses.push_back(pose);
  }
  return traj;
}

}  // namespace worldwalk
