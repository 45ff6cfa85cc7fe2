#pragma once

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "ball3d/geometry.hpp"
#include "ball3d/rng.hpp"
#include "ball3d/simulator.hpp"

namespace ball3d::test {

/// Elevated camera looking down into the scene from negative z, with random intrinsics.
inline CameraModel random_camera(Rng& rng) {
    const Vec3 eye(uniform(rng, -3.0, 3.0), uniform(rng, 2.0, 8.0), uniform(rng, -12.0, -4.0));
    const Vec3 target(uniform(rng, -2.0, 2.0), 0.0, uniform(rng, 0.0, 4.0));
    CameraModel cam = CameraModel::look_at(eye, target, uniform(rng, 500.0, 2000.0),
                                           {uniform(rng, 640.0, 1920.0), uniform(rng, 480.0, 1080.0)});
    cam.principal_point += Eigen::Vector2d(uniform(rng, -20.0, 20.0), uniform(rng, -20.0, 20.0));
    return cam;
}

/// Fresh per-test scratch path under the system temp directory.
inline std::filesystem::path temp_path(const std::string& name) {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::filesystem::path dir = std::filesystem::temp_directory_path() / "ball3d-tests";
    if (info != nullptr) dir /= std::string(info->test_suite_name()) + "." + info->name();
    std::filesystem::create_directories(dir);
    return dir / name;
}

/// Simulated and rendered sequence of `family` for `seed`.
inline Sequence rendered(Family family, std::uint64_t seed) {
    SimConfig config = default_sim_config(family);
    config.seed = seed;
    return render_track(simulate_family(config).sequence, default_camera(family));
}

}  // namespace ball3d::test
