#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>

#include "mt3d/core/errors.hpp"
#include "mt3d/core/rng.hpp"
#include "mt3d/scene/asset.hpp"
#include "mt3d/scene/camera.hpp"
#include "mt3d/scene/gaussian.hpp"
#include "mt3d/scene/kdtree.hpp"
#include "mt3d/scene/ply.hpp"
#include "mt3d/scene/prompt.hpp"
#include "mt3d/scene/toy_assets.hpp"

using namespace mt3d;
using Eigen::Vector3d;
using Eigen::Vector4d;

namespace {

constexpr double kPi = M_PI;

std::vector<Vector3d> random_points(std::size_t n, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vector3d> pts(n);
    for (auto& p : pts) p = Vector3d(u(gen), u(gen), u(gen));
    return pts;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST(Reparameterization, RoundTrips) {
    for (double p : {1e-6, 0.1, 0.5, 0.9, 0.999999}) EXPECT_NEAR(sigmoid(logit(p)), p, 1e-12);
    for (double s : {1e-4, 0.05, 1.0, 3.0}) {
        const Gaussian3D g = Gaussian3D::from_physical(Vector3d::Zero(), Vector3d::Constant(s),
                                                       Vector4d(1, 0, 0, 0), 0.3, Vector3d::Zero());
        EXPECT_NEAR(g.scale()[0], s, 1e-12 * std::max(1.0, s));
        EXPECT_NEAR(g.opacity(), 0.3, 1e-12);
    }
    EXPECT_GT(sigmoid(-800.0), -1.0);
    EXPECT_TRUE(std::isfinite(sigmoid(800.0)));
}

TEST(Gaussian, CovarianceIsSymmetricPositiveSemidefinite) {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 1000; ++trial) {
        Gaussian3D g;
        g.log_scale = Vector3d(n(gen), n(gen), n(gen)) * 2.0;
        g.rotation = Vector4d(n(gen), n(gen), n(gen), n(gen));
        const Eigen::Matrix3d cov = g.covariance();
        ASSERT_LT((cov - cov.transpose()).norm(), 1e-12 * std::max(1.0, cov.norm()));
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
        ASSERT_GE(es.eigenvalues().minCoeff(), -1e-12 * es.eigenvalues().maxCoeff());
        ASSERT_NEAR(g.unit_rotation().norm(), 1.0, 1e-9);
    }
}

TEST(Gaussian, RotationMatrixIsOrthonormal) {
    Gaussian3D g;
    g.rotation = Vector4d(0.3, -1.2, 0.4, 2.0);
    const Eigen::Matrix3d r = g.rotation_matrix();
    EXPECT_LT((r * r.transpose() - Eigen::Matrix3d::Identity()).norm(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
}

TEST(Camera, DegenerateRangesForceOnePose) {
    Rng rng(7);
    const CameraPose cam = sample_camera(rng, {0, 0}, {0, 0}, {2, 2});
    EXPECT_NEAR((cam.position - Vector3d(2, 0, 0)).norm(), 0.0, 1e-12);
    EXPECT_EQ(cam.target, Vector3d::Zero());
    EXPECT_LT(cam.to_camera(Vector3d::Zero()).head<2>().norm(), 1e-12);
    EXPECT_NEAR(cam.to_camera(Vector3d::Zero()).z(), 2.0, 1e-12);
}

TEST(Camera, SameSeedSamePose) {
    Rng a(11), b(11);
    for (int i = 0; i < 20; ++i)
        EXPECT_EQ(sample_camera(a, {-0.2, 0.8}, {-kPi, kPi}, {2, 3}), sample_camera(b, {-0.2, 0.8}, {-kPi, kPi}, {2, 3}));
}

TEST(Camera, AzimuthUniformPerOctant) {
    Rng rng(2024);
    std::array<int, 8> bins{};
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const CameraPose cam = sample_camera(rng, {0.1, 0.5}, {0.0, 2 * kPi}, {2.5, 3.5});
        cam.validate();
        double a = cam.azimuth();
        if (a < 0) a += 2 * kPi;
        bins[std::min(7, static_cast<int>(a / (kPi / 4)))]++;
    }
    double chi2 = 0.0;
    for (int b : bins) {
        EXPECT_NEAR(b, n / 8.0, 0.05 * n / 8.0);
        chi2 += (b - n / 8.0) * (b - n / 8.0) / (n / 8.0);
    }
    EXPECT_LT(chi2, 24.32);  // 7 degrees of freedom, p = 0.001
}

TEST(Camera, InvalidRangesAreConfigErrors) {
    Rng rng(0);
    EXPECT_THROW(sample_camera(rng, {0.5, 0.1}, {0, 1}, {2, 3}), ConfigError);
    EXPECT_THROW(sample_camera(rng, {0, 0.1}, {1, 0}, {2, 3}), ConfigError);
    EXPECT_THROW(sample_camera(rng, {0, 0.1}, {0, 1}, {-1, 3}), ConfigError);
    EXPECT_THROW(sample_camera(rng, {0, NAN}, {0, 1}, {2, 3}), ConfigError);
}

TEST(Camera, PoseInvariantsEnforced) {
    CameraPose cam;
    EXPECT_NO_THROW(cam.validate());
    cam.near = 0.0;
    EXPECT_THROW(cam.validate(), ConfigError);
    cam = CameraPose();
    cam.far = cam.near;
    EXPECT_THROW(cam.validate(), ConfigError);
    cam = CameraPose();
    cam.width = 7;
    EXPECT_THROW(cam.validate(), ConfigError);
    cam = CameraPose();
    cam.position = Vector3d(0, 0, 2);
    EXPECT_THROW(cam.validate(), ConfigError);
    // Looking straight down still works through the orbit helper.
    EXPECT_NO_THROW(orbit_camera(0.0, kPi / 2, 2.0, CameraIntrinsics{}).validate());
}

TEST(Camera, OrbitAnglesRoundTrip) {
    const CameraPose cam = orbit_camera(1.1, 0.4, 2.7, CameraIntrinsics{});
    EXPECT_NEAR(cam.azimuth(), 1.1, 1e-12);
    EXPECT_NEAR(cam.elevation(), 0.4, 1e-12);
    EXPECT_NEAR(cam.distance(), 2.7, 1e-12);
    // World up projects to image up (negative camera y).
    const Eigen::Matrix3d w = cam.world_to_camera();
    EXPECT_LT((w * Vector3d::UnitZ()).y(), 0.0);
}

TEST(ViewPrompt, QuadrantTags) {
    const CameraIntrinsics in;
    auto tag = [&](double az_deg, double el_deg) {
        return view_prompt("a lion", orbit_camera(az_deg * kPi / 180, el_deg * kPi / 180, 2.0, in)).text;
    };
    EXPECT_EQ(tag(0, 0), "a lion, front view");
    EXPECT_EQ(tag(180, 0), "a lion, back view");
    EXPECT_EQ(tag(90, 10), "a lion, side view");
    EXPECT_EQ(tag(-90, 10), "a lion, side view");
    EXPECT_EQ(tag(30, 70), "a lion, overhead view");
    EXPECT_THROW(view_prompt("", orbit_camera(0, 0, 2, in)), InvalidInput);
}

TEST(ViewPrompt, BoundariesByEnumeration) {
    // Brute enumeration on a 1-degree grid against the stated quadrant table.
    for (int el = -30; el <= 89; ++el)
        for (int az = -179; az <= 180; ++az) {
            ViewTag expected;
            if (el > 60) expected = ViewTag::kOverhead;
            else if (az > -45 && az <= 45) expected = ViewTag::kFront;
            else if ((az > 45 && az <= 135) || (az > -135 && az <= -45)) expected = ViewTag::kSide;
            else expected = ViewTag::kBack;
            ASSERT_EQ(classify_view(az * kPi / 180, el * kPi / 180), expected) << az << " " << el;
        }
}

TEST(ViewPrompt, EmbeddingNormalized) {
    const PromptEmbedding e = PromptEmbedding::from_text("A Ceramic lion, front view");
    double n = 0.0;
    for (double v : e.vector) n += v * v;
    EXPECT_NEAR(n, 1.0, 1e-12);
    EXPECT_TRUE(std::is_sorted(e.tokens.begin(), e.tokens.end()));
    EXPECT_EQ(e.tokens.size(), 5u);
}

TEST(FarthestPoint, UnitCubeCorners) {
    std::vector<Vector3d> pts;
    for (int i = 0; i < 8; ++i) pts.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
    // Distractors strictly inside the cube.
    for (const auto& p : random_points(40, 3)) pts.push_back(Vector3d::Constant(0.5) + 0.3 * p);
    const auto picks = farthest_point_sample(pts, 8);
    std::set<std::size_t> s(picks.begin(), picks.end());
    EXPECT_EQ(s, (std::set<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7}));
}

TEST(FarthestPoint, BruteForceOracle) {
    const auto pts = random_points(200, 4);
    const auto picks = farthest_point_sample(pts, 20);
    Vector3d centroid = Vector3d::Zero();
    for (const auto& p : pts) centroid += p;
    centroid /= pts.size();
    std::vector<std::size_t> oracle;
    std::size_t first = 0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if ((pts[i] - centroid).norm() > (pts[first] - centroid).norm()) first = i;
    oracle.push_back(first);
    while (oracle.size() < 20) {
        std::size_t best = 0;
        double best_d = -1.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double d = 1e300;
            for (std::size_t j : oracle) d = std::min(d, (pts[i] - pts[j]).norm());
            if (d > best_d) {
                best_d = d;
                best = i;
            }
        }
        oracle.push_back(best);
    }
    EXPECT_EQ(picks, oracle);
}

TEST(InitFromPointcloud, ExactCountIsPermutation) {
    const auto pts = random_points(30, 5);
    const ReferenceAsset asset = ReferenceAsset::create(pts, std::vector<Vector3d>(30, Vector3d(0.2, 0.4, 0.6)), "blob");
    const GaussianScene scene = init_from_pointcloud(asset, 30);
    ASSERT_EQ(scene.size(), 30u);
    std::vector<std::size_t> matched;
    for (const auto& g : scene.gaussians) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < asset.points.size(); ++i)
            if ((asset.points[i] - g.mean).norm() < (asset.points[best] - g.mean).norm()) best = i;
        EXPECT_LT((asset.points[best] - g.mean).norm(), 1e-15);
        matched.push_back(best);
        EXPECT_NEAR(g.opacity(), 0.1, 1e-12);
        EXPECT_EQ(g.color, Vector3d(0.2, 0.4, 0.6));
        EXPECT_NEAR(g.scale()[0], g.scale()[2], 1e-15);
    }
    std::sort(matched.begin(), matched.end());
    EXPECT_EQ(std::unique(matched.begin(), matched.end()), matched.end());
    EXPECT_NEAR(scene.gaussians[0].scale()[0], mean_nearest_neighbor_distance(asset.points), 1e-12);
}

TEST(InitFromPointcloud, SingleGaussianIsFarthestFromCentroid) {
    const auto pts = random_points(50, 6);
    const ReferenceAsset asset = ReferenceAsset::create(pts, std::vector<Vector3d>(50, Vector3d::Ones()), "blob");
    const GaussianScene scene = init_from_pointcloud(asset, 1);
    Vector3d centroid = Vector3d::Zero();
    for (const auto& p : asset.points) centroid += p;
    centroid /= 50.0;
    double best = 0.0;
    for (const auto& p : asset.points) best = std::max(best, (p - centroid).norm());
    EXPECT_NEAR((scene.gaussians[0].mean - centroid).norm(), best, 1e-12);
}

TEST(InitFromPointcloud, Errors) {
    EXPECT_THROW(init_from_pointcloud(ReferenceAsset{}, 4), InvalidInput);
    const ReferenceAsset asset = make_sphere_asset(100);
    EXPECT_THROW(init_from_pointcloud(asset, 0), ConfigError);
    EXPECT_THROW(init_from_pointcloud(asset, 101), ConfigError);
    EXPECT_THROW(ReferenceAsset::create({}, {}, "x"), InvalidInput);
}

TEST(ReferenceAssetTest, NormalizedToUnitSphere) {
    std::vector<Vector3d> pts = random_points(100, 7);
    for (auto& p : pts) p = 5.0 * p + Vector3d(10, -3, 2);
    const ReferenceAsset asset = ReferenceAsset::create(pts, std::vector<Vector3d>(100, Vector3d::Zero()), "x");
    double r = 0.0;
    for (const auto& p : asset.points) r = std::max(r, p.norm());
    EXPECT_NEAR(r, 1.0, 1e-12);
    EXPECT_GT(asset.point_footprint, 0.0);
}

TEST(ToyAssets, OnlyTheTwoFacedSnoutIsMirrorSymmetric) {
    auto mean_x = [](const ReferenceAsset& a) {
        double s = 0.0;
        for (const auto& p : a.points) s += p.x();
        return s / a.points.size();
    };
    EXPECT_LT(std::abs(mean_x(make_snout_asset(true))), 1e-3);
    EXPECT_GT(std::abs(mean_x(make_snout_asset(false))), 0.01);
}

TEST(KdTreeTest, MatchesBruteForce) {
    const auto pts = random_points(500, 8);
    const KdTree tree(pts);
    for (const auto& q : random_points(50, 9)) {
        std::vector<std::pair<double, std::size_t>> all;
        for (std::size_t i = 0; i < pts.size(); ++i) all.emplace_back((pts[i] - q).squaredNorm(), i);
        std::sort(all.begin(), all.end());
        EXPECT_EQ(tree.nearest(q).index, all[0].second);
        const auto k = tree.k_nearest(q, 5);
        ASSERT_EQ(k.size(), 5u);
        for (int j = 0; j < 5; ++j) EXPECT_EQ(k[j].index, all[j].second);
        const auto skipped = tree.k_nearest(q, 2, all[0].second);
        EXPECT_EQ(skipped[0].index, all[1].second);
    }
}

TEST(Ply, GaussianSceneRoundTripBinaryAndAscii) {
    GaussianScene scene;
    std::mt19937_64 gen(10);
    std::normal_distribution<double> n;
    for (int i = 0; i < 17; ++i) {
        Gaussian3D g;
        g.mean = Vector3d(n(gen), n(gen), n(gen));
        g.log_scale = Vector3d(n(gen), n(gen), n(gen));
        g.rotation = Vector4d(n(gen), n(gen), n(gen), n(gen));
        g.opacity_logit = n(gen);
        g.color = Vector3d(0.1, 0.2, 0.3) * std::abs(n(gen));
        scene.gaussians.push_back(g);
    }
    for (PlyFormat fmt : {PlyFormat::kBinaryLittleEndian, PlyFormat::kAscii}) {
        const auto path = temp_file("mt3d_scene.ply");
        save_gaussian_scene(path, scene, fmt);
        const GaussianScene back = load_gaussian_scene(path);
        ASSERT_EQ(back.size(), scene.size());
        for (std::size_t i = 0; i < scene.size(); ++i) {
            EXPECT_EQ(back.gaussians[i].mean, scene.gaussians[i].mean);
            EXPECT_EQ(back.gaussians[i].log_scale, scene.gaussians[i].log_scale);
            EXPECT_EQ(back.gaussians[i].rotation, scene.gaussians[i].rotation);
            EXPECT_EQ(back.gaussians[i].opacity_logit, scene.gaussians[i].opacity_logit);
            EXPECT_EQ(back.gaussians[i].color, scene.gaussians[i].color);
        }
        std::filesystem::remove(path);
    }
}

TEST(Ply, ReadsUcharColorsAndFaces) {
    std::stringstream s;
    s << "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\nelement face 1\n"
         "property list uchar int vertex_indices\nend_header\n"
         "0 0 0 255 0 0\n1 0 0 0 255 0\n0 1 0 0 0 255\n3 0 1 2\n";
    const PlyData data = read_ply(s);
    const auto path = temp_file("mt3d_tri.ply");
    write_ply(path, data);
    const ReferenceAsset asset = load_reference_asset(path, "tri");
    ASSERT_EQ(asset.points.size(), 3u);
    EXPECT_EQ(asset.colors[0], Vector3d(1, 0, 0));
    ASSERT_TRUE(asset.mesh.has_value());
    EXPECT_EQ(asset.mesh->triangles.size(), 1u);
    std::filesystem::remove(path);
}

TEST(Ply, MalformedInputNamesElement) {
    std::stringstream s("ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nend_header\n0\n");
    try {
        read_ply(s);
        FAIL();
    } catch (const InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find("vertex"), std::string::npos);
    }
    EXPECT_THROW(load_reference_asset(temp_file("mt3d_missing_file.ply")), ConfigError);
}

TEST(RngTest, SerializeRestoresStream) {
    Rng a(99);
    a.normal();
    a.uniform();
    const std::string state = a.serialize();
    const double next = a.uniform();
    Rng b(1);
    b.deserialize(state);
    EXPECT_EQ(b.uniform(), next);
    EXPECT_EQ(a, b);
}
