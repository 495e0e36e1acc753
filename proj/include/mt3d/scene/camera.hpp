#pragma once

#include <Eigen/Core>

namespace mt3d {

class Rng;

/// Closed interval [lo, hi]; lo == hi is a degenerate but valid range.
struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct CameraIntrinsics {
    double fov_y = 0.6981317007977318;  // 40 degrees
    int width = 64;
    int height = 64;
    double near = 0.1;
    double far = 10.0;
};

/// Pinhole camera looking from position toward target.
///
/// Camera space is x right, y down, z forward; pixel (i, j) has its center at
/// (i + 0.5, j + 0.5) and the principal point sits at the image center.
struct CameraPose {
    Eigen::Vector3d position = Eigen::Vector3d(2.0, 0.0, 0.0);
    Eigen::Vector3d target = Eigen::Vector3d::Zero();
    Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
    double fov_y = 0.6981317007977318;
    int width = 64;
    int height = 64;
    double near = 0.1;
    double far = 10.0;

    /// Throws ConfigError when an invariant is violated.
    void validate() const;

    double focal() const;
    double cx() const { return 0.5 * width; }
    double cy() const { return 0.5 * height; }
    /// Rows are the camera right, down and forward axes in world coordinates.
    Eigen::Matrix3d world_to_camera() const;
    Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const;

    /// Spherical angles of the camera position about the target (z up).
    double azimuth() const;
    double elevation() const;
    double distance() const { return (position - target).norm(); }

    bool operator==(const CameraPose&) const = default;
};

/// Camera on a sphere around target at the given azimuth/elevation (radians).
/// Azimuth 0 lies on +x, elevation is measured from the xy plane toward +z.
CameraPose orbit_camera(double azimuth, double elevation, double radius,
                        const CameraIntrinsics& intrinsics,
                        const Eigen::Vector3d& target = Eigen::Vector3d::Zero());

/// Uniformly samples elevation, azimuth and radius from their ranges and
/// returns a camera looking at the origin. Throws ConfigError for inverted or
/// non-finite ranges and for non-positive radii.
CameraPose sample_camera(Rng& rng, Range elevation, Range azimuth, Range radius,
                         const CameraIntrinsics& intrinsics = {});

}  // namespace mt3d
