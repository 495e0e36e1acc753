#include "mt3d/scene/camera.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <string>

#include "mt3d/core/errors.hpp"
#include "mt3d/core/rng.hpp"

namespace mt3d {

void CameraPose::validate() const {
    if (!position.allFinite() || !target.allFinite() || !up.allFinite())
        throw ConfigError("camera: non-finite pose");
    if (!(near > 0.0)) throw ConfigError("camera: near must be > 0");
    if (!(far > near)) throw ConfigError("camera: far must exceed near");
    if (width < 8 || height < 8) throw ConfigError("camera: image must be at least 8x8");
    if (!(fov_y > 0.0 && fov_y < M_PI)) throw ConfigError("camera: fov_y must be in (0, pi)");
    const Eigen::Vector3d view = target - position;
    if (view.norm() == 0.0) throw ConfigError("camera: position equals target");
    if (view.normalized().cross(up.normalized()).norm() < 1e-9)
        throw ConfigError("camera: up is parallel to the view direction");
}

double CameraPose::focal() const { return 0.5 * height / std::tan(0.5 * fov_y); }

Eigen::Matrix3d CameraPose::world_to_camera() const {
    const Eigen::Vector3d forward = (target - position).normalized();
    const Eigen::Vector3d right = forward.cross(up).normalized();
    const Eigen::Vector3d down = forward.cross(right);
    Eigen::Matrix3d w;
    w.row(0) = right.transpose();
    w.row(1) = down.transpose();
    w.row(2) = forward.transpose();
    return w;
}

Eigen::Vector3d CameraPose::to_camera(const Eigen::Vector3d& world) const {
    return world_to_camera() * (world - position);
}

double CameraPose::azimuth() const {
    const Eigen::Vector3d d = position - target;
    return std::atan2(d.y(), d.x());
}

double CameraPose::elevation() const {
    const Eigen::Vector3d d = position - target;
    return std::asin(std::clamp(d.z() / d.norm(), -1.0, 1.0));
}

CameraPose orbit_camera(double azimuth, double elevation, double radius,
                        const CameraIntrinsics& intrinsics, const Eigen::Vector3d& target) {
    CameraPose cam;
    const double ce = std::cos(elevation);
    cam.position = target + radius * Eigen::Vector3d(ce * std::cos(azimuth),
                                                     ce * std::sin(azimuth),
                                                     std::sin(elevation));
    cam.target = target;
    // Straight above or below, z is parallel to the view; tilt up toward -radial.
    cam.up = std::abs(ce) < 1e-6
                 ? Eigen::Vector3d(-std::cos(azimuth), -std::sin(azimuth), 0.0)
                 : Eigen::Vector3d::UnitZ();
    cam.fov_y = intrinsics.fov_y;
    cam.width = intrinsics.width;
    cam.height = intrinsics.height;
    cam.near = intrinsics.near;
    cam.far = intrinsics.far;
    return cam;
}

namespace {
void check_range(const Range& r, const char* name) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi))
        throw ConfigError(std::string("camera sampling: non-finite ") + name + " range");
    if (r.hi < r.lo) throw ConfigError(std::string("camera sampling: inverted ") + name + " range");
}
}  // namespace

CameraPose sample_camera(Rng& rng, Range elevation, Range azimuth, Range radius,
                         const CameraIntrinsics& intrinsics) {
    check_range(elevation, "elevation");
    check_range(azimuth, "azimuth");
    check_range(radius, "radius");
    if (!(radius.lo > 0.0)) throw ConfigError("camera sampling: radius must be positive");
    const double az = rng.uniform(azimuth.lo, azimuth.hi);
    const double el = rng.uniform(elevation.lo, elevation.hi);
    const double r = rng.uniform(radius.lo, radius.hi);
    CameraPose cam = orbit_camera(az, el, r, intrinsics);
    cam.validate();
    return cam;
}

}  // namespace mt3d
