#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ball3d {

using Vec3 = Eigen::Vector3d;
using Mat4 = Eigen::Matrix4d;

/// Rays closer than this to being parallel with the ground or vertical plane are rejected.
inline constexpr double kParallelEpsilon = 1e-9;

struct Pixel {
    double u = 0.0;
    double v = 0.0;
};

/// Pinhole camera: square pixels, principal point, rigid world-to-camera transform.
///
/// Image coordinates are y-down and the camera looks along +z of its own frame.
struct CameraModel {
    double focal_px = 1000.0;
    Eigen::Vector2d principal_point{0.0, 0.0};
    Eigen::Vector2d image_size{1.0, 1.0};
    Mat4 extrinsic = Mat4::Identity();

    /// Throws InvalidCamera unless the rotation block is proper orthonormal and sizes are positive.
    void validate() const;

    /// Camera centre in world coordinates.
    Vec3 center() const;
    Eigen::Matrix3d rotation() const { return extrinsic.topLeftCorner<3, 3>(); }
    Vec3 translation() const { return extrinsic.topRightCorner<3, 1>(); }

    /// Builds an extrinsic for a camera at `eye` looking at `target`, world +y up.
    static CameraModel look_at(const Vec3& eye, const Vec3& target, double focal_px,
                               Eigen::Vector2d image_size);
};

/// Viewing ray r(s) = origin + direction * s.
struct Ray {
    Vec3 origin = Vec3::Zero();
    Vec3 direction = Vec3::UnitZ();

    Vec3 at(double s) const { return origin + direction * s; }
};

/// Canonical ray encoding: ground-plane hit (y = 0) without y and vertical-plane
/// hit (z = 0) without z.
struct PlanePoints {
    double gx = 0.0;
    double gz = 0.0;
    double vx = 0.0;
    double vy = 0.0;

    Vec3 ground() const { return {gx, 0.0, gz}; }
    Vec3 vertical() const { return {vx, vy, 0.0}; }
    Eigen::Vector4d as_vector() const { return {gx, gz, vx, vy}; }
    static PlanePoints from_vector(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }

    friend bool operator==(const PlanePoints&, const PlanePoints&) = default;
};

Ray back_project(const Pixel& pixel, const CameraModel& cam);

/// Throws RayParallelToPlane when the ray misses either plane.
PlanePoints ray_to_plane_points(const Ray& ray);

/// Point on the ray whose world height equals `height`.
Vec3 height_to_point(const Ray& ray, double height);

/// Throws BehindCamera for points with non-positive depth.
Pixel project(const Vec3& point, const CameraModel& cam);

/// Temporal differences P[t+1] - P[t]; throws SequenceTooShort below two entries.
std::vector<Eigen::Vector4d> plane_point_deltas(std::span<const PlanePoints> points);

// Camera file: {"focal_px", "principal_point":[px,py], "image_size":[w,h], "extrinsic":[16 row-major]}
std::string camera_to_json(const CameraModel& cam);
CameraModel camera_from_json(const std::string& text);
void save_camera(const CameraModel& cam, const std::string& path);
/// Stable identifier derived from the camera JSON ("cam-" + 16 hex digits); datasets record it
/// as their camera_id so mismatched camera files can be detected.
std::string camera_fingerprint(const CameraModel& cam);
CameraModel load_camera(const std::string& path);

}  // namespace ball3d
