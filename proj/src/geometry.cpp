#include "ball3d/geometry.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <json.hpp>

#include "ball3d/errors.hpp"

namespace ball3d {

void CameraModel::validate() const {
    if (!(focal_px > 0.0) || !std::isfinite(focal_px)) {
        throw InvalidCamera("focal_px must be positive");
    }
    if (!(image_size.x() > 0.0) || !(image_size.y() > 0.0)) {
        throw InvalidCamera("image_size components must be positive");
    }
    if (!extrinsic.allFinite()) {
        throw InvalidCamera("extrinsic has non-finite entries");
    }
    const Eigen::Matrix3d r = rotation();
    if ((r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
        std::abs(r.determinant() - 1.0) > 1e-9) {
        throw InvalidCamera("extrinsic rotation is not a proper rotation");
    }
    const Eigen::RowVector4d last = extrinsic.row(3);
    if ((last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12) {
        throw InvalidCamera("extrinsic last row must be [0 0 0 1]");
    }
}

Vec3 CameraModel::center() const { return -rotation().transpose() * translation(); }

CameraModel CameraModel::look_at(const Vec3& eye, const Vec3& target, double focal_px,
                                 Eigen::Vector2d image_size) {
    // Camera axes in world coordinates: z forward, x right, y down.
    const Vec3 forward = (target - eye).normalized();
    Vec3 right = forward.cross(Vec3::UnitY());
    if (right.norm() < 1e-12) {
        throw InvalidCamera("look_at direction is parallel to world up");
    }
    right.normalize();
    const Vec3 down = forward.cross(right);

    Eigen::Matrix3d r;
    r.row(0) = right.transpose();
    r.row(1) = down.transpose();
    r.row(2) = forward.transpose();

    CameraModel cam;
    cam.focal_px = focal_px;
    cam.image_size = image_size;
    cam.principal_point = image_size / 2.0;
    cam.extrinsic.setIdentity();
    cam.extrinsic.topLeftCorner<3, 3>() = r;
    cam.extrinsic.topRightCorner<3, 1>() = -r * eye;
    return cam;
}

Ray back_project(const Pixel& pixel, const CameraModel& cam) {
    // E^-1 applied to a point at the origin and to a direction, then dehomogenized.
    const Eigen::Matrix3d rt = cam.rotation().transpose();
    Ray ray;
    ray.origin = -rt * cam.translation();
    ray.direction = rt * Vec3(pixel.u - cam.principal_point.x(), pixel.v - cam.principal_point.y(),
                              cam.focal_px);
    return ray;
}

PlanePoints ray_to_plane_points(const Ray& ray) {
    const Vec3& c = ray.origin;
    const Vec3& d = ray.direction;
    if (std::abs(d.y()) <= kParallelEpsilon) {
        throw RayParallelToPlane("ray is parallel to the ground plane");
    }
    if (std::abs(d.z()) <= kParallelEpsilon) {
        throw RayParallelToPlane("ray is parallel to the vertical plane");
    }
    const double s_ground = -c.y() / d.y();
    const double s_vertical = -c.z() / d.z();
    return {c.x() + d.x() * s_ground, c.z() + d.z() * s_ground, c.x() + d.x() * s_vertical,
            c.y() + d.y() * s_vertical};
}

Vec3 height_to_point(const Ray& ray, double height) {
    if (std::abs(ray.direction.y()) <= kParallelEpsilon) {
        throw RayParallelToPlane("ray is parallel to the ground plane");
    }
    const double s = (height - ray.origin.y()) / ray.direction.y();
    Vec3 p = ray.at(s);
    p.y() = height;
    return p;
}

Pixel project(const Vec3& point, const CameraModel& cam) {
    const Vec3 pc = cam.rotation() * point + cam.translation();
    if (pc.z() <= 0.0) {
        throw BehindCamera("point has non-positive depth");
    }
    return {cam.focal_px * pc.x() / pc.z() + cam.principal_point.x(),
            cam.focal_px * pc.y() / pc.z() + cam.principal_point.y()};
}

std::vector<Eigen::Vector4d> plane_point_deltas(std::span<const PlanePoints> points) {
    if (points.size() < 2) {
        throw SequenceTooShort("plane point deltas need at least two frames");
    }
    std::vector<Eigen::Vector4d> deltas;
    deltas.reserve(points.size() - 1);
    for (std::size_t t = 0; t + 1 < points.size(); ++t) {
        deltas.push_back(points[t + 1].as_vector() - points[t].as_vector());
    }
    return deltas;
}

std::string camera_to_json(const CameraModel& cam) {
    nlohmann::ordered_json j;
    j["focal_px"] = cam.focal_px;
    j["principal_point"] = {cam.principal_point.x(), cam.principal_point.y()};
    j["image_size"] = {cam.image_size.x(), cam.image_size.y()};
    auto e = nlohmann::json::array();
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            e.push_back(cam.extrinsic(r, c));
        }
    }
    j["extrinsic"] = e;
    return j.dump(2);
}

CameraModel camera_from_json(const std::string& text) {
    CameraModel cam;
    try {
        const auto j = nlohmann::json::parse(text);
        cam.focal_px = j.at("focal_px").get<double>();
        const auto& pp = j.at("principal_point");
        const auto& size = j.at("image_size");
        const auto& e = j.at("extrinsic");
        if (pp.size() != 2 || size.size() != 2 || e.size() != 16) {
            throw InvalidCamera("camera JSON arrays have wrong length");
        }
        cam.principal_point = {pp[0].get<double>(), pp[1].get<double>()};
        cam.image_size = {size[0].get<double>(), size[1].get<double>()};
        for (int i = 0; i < 16; ++i) {
            cam.extrinsic(i / 4, i % 4) = e[i].get<double>();
        }
    } catch (const nlohmann::json::exception& ex) {
        throw InvalidCamera(std::string("malformed camera JSON: ") + ex.what());
    }
    cam.validate();
    return cam;
}

void save_camera(const CameraModel& cam, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw InvalidArgument("cannot write camera file " + path);
    }
    out << camera_to_json(cam) << '\n';
}

std::string camera_fingerprint(const CameraModel& cam) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : camera_to_json(cam)) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "cam-%016llx", static_cast<unsigned long long>(h));
    return buf;
}

CameraModel load_camera(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument("cannot read camera file " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return camera_from_json(ss.str());
}

}  // namespace ball3d
