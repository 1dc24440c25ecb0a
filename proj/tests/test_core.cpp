#include <gtest/gtest.h>

#include "fflogo/core/kdtree.hpp"
#include "fflogo/core/normals.hpp"
#include "fflogo/core/point_cloud.hpp"
#include "fflogo/core/transform.hpp"
#include "fflogo/core/voxel_grid.hpp"
#include "test_support.hpp"

using namespace fflogo;
namespace ts = test_support;

// ---- RigidTransform --------------------------------------------------------

TEST(Transform, IdentityAndComposition) {
  const auto T = ts::random_transform(11);
  EXPECT_LT(ts::transform_distance(compose(RigidTransform::identity(), T), T), 1e-15);
  EXPECT_LT(ts::transform_distance(compose(T, RigidTransform::identity()), T), 1e-15);
}

TEST(Transform, InverseRoundTrip) {
  const auto T = ts::random_transform(12);
  EXPECT_LT(ts::transform_distance(compose(invert(T), T), RigidTransform::identity()), 1e-12);
  EXPECT_LT(ts::transform_distance(invert(invert(T)), T), 1e-12);
}

TEST(Transform, ComposeAppliesSecondArgumentFirst) {
  const auto T1 = ts::random_transform(13);
  const auto T2 = ts::random_transform(14);
  const Eigen::Vector3d p(0.3, -0.2, 0.9);
  EXPECT_LT((compose(T1, T2).apply(p) - T1.apply(T2.apply(p))).norm(), 1e-12);
}

TEST(Transform, Associativity) {
  const auto A = ts::random_transform(21);
  const auto B = ts::random_transform(22);
  const auto C = ts::random_transform(23);
  EXPECT_LT(ts::transform_distance(compose(compose(A, B), C), compose(A, compose(B, C))), 1e-12);
}

TEST(Transform, LongChainStaysOrthonormal) {
  RigidTransform T = RigidTransform::identity();
  for (int i = 0; i < 100; ++i) {
    const auto step = ts::random_transform(100 + i);
    T = (i % 3 == 0) ? compose(invert(step), T) : compose(T, step);
  }
  EXPECT_TRUE(T.is_valid(1e-9));
}

TEST(Transform, FromMatrixRejectsNonRigid) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 0) = 2.0;
  EXPECT_THROW(RigidTransform::from_matrix(m), std::invalid_argument);
}

// ---- apply_transform --------------------------------------------------------

TEST(ApplyTransform, IdentityLeavesCloudAlone) {
  const auto cloud = ts::random_cloud(31, 50);
  const auto moved = apply_transform(cloud, RigidTransform::identity());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    EXPECT_EQ(cloud.points[i], moved.points[i]);
}

TEST(ApplyTransform, InverseRestoresCloud) {
  const auto cloud = ts::random_cloud(32, 80);
  const auto T = ts::random_transform(33);
  const auto back = apply_transform(apply_transform(cloud, T), invert(T));
  for (std::size_t i = 0; i < cloud.size(); ++i)
    EXPECT_LT((cloud.points[i] - back.points[i]).norm(), 1e-12);
}

TEST(ApplyTransform, PreservesPairwiseDistances) {
  const auto cloud = ts::random_cloud(34, 40);
  const auto moved = apply_transform(cloud, ts::random_transform(35));
  for (std::size_t i = 0; i < cloud.size(); ++i)
    for (std::size_t j = i + 1; j < cloud.size(); ++j) {
      const double before = (cloud.points[i] - cloud.points[j]).norm();
      const double after = (moved.points[i] - moved.points[j]).norm();
      EXPECT_NEAR(before, after, 1e-12);
    }
}

TEST(ApplyTransform, RotatesNormals) {
  PointCloud cloud;
  cloud.points = {{0, 0, 0}, {1, 0, 0}};
  cloud.normals = {{0, 0, 1}, {0, 0, 1}};
  cloud.normal_valid = {1, 1};
  const auto T = RigidTransform::from_axis_angle({1, 0, 0}, M_PI / 2);
  const auto moved = apply_transform(cloud, T);
  EXPECT_LT((moved.normals[0] - Eigen::Vector3d(0, -1, 0)).norm(), 1e-12);
}

// ---- PointCloud invariants --------------------------------------------------

TEST(PointCloud, ValidateCatchesBadNormals) {
  PointCloud cloud;
  cloud.points = {{0, 0, 0}};
  cloud.normals = {{0, 0, 2}};
  cloud.normal_valid = {1};
  EXPECT_THROW(cloud.validate(), std::invalid_argument);
}

TEST(PointCloud, ValidateCatchesNonFinite) {
  PointCloud cloud;
  cloud.points = {{0, 0, std::numeric_limits<double>::quiet_NaN()}};
  EXPECT_THROW(cloud.validate(), std::invalid_argument);
}

// ---- voxel_downsample --------------------------------------------------------

TEST(VoxelDownsample, MergesPointsInOneVoxel) {
  PointCloud cloud;
  cloud.points = {{0.01, 0, 0}, {0.02, 0, 0}};
  const auto down = voxel_downsample(cloud, 0.05);
  ASSERT_EQ(down.size(), 1u);
  EXPECT_LT((down.points[0] - Eigen::Vector3d(0.015, 0, 0)).norm(), 1e-15);
}

TEST(VoxelDownsample, KeepsPointsInDistinctVoxels) {
  PointCloud cloud;
  cloud.points = {{0, 0, 0}, {0.06, 0, 0}};
  const auto down = voxel_downsample(cloud, 0.05);
  ASSERT_EQ(down.size(), 2u);
  EXPECT_EQ(down.points[0], Eigen::Vector3d(0, 0, 0));
  EXPECT_EQ(down.points[1], Eigen::Vector3d(0.06, 0, 0));
}

TEST(VoxelDownsample, OutputMatchesOccupiedVoxelCount) {
  const auto cloud = ts::random_cloud(41, 10000);
  const auto down = voxel_downsample(cloud, 0.05);
  EXPECT_EQ(down.size(), ts::brute_force_occupied_voxels(cloud, 0.05));
  EXPECT_LE(down.size(), 8000u);  // at most 20^3 occupied cells in the unit cube
}

TEST(VoxelDownsample, Idempotent) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto cloud = ts::random_cloud(seed, 2000);
    const auto once = voxel_downsample(cloud, 0.07);
    const auto twice = voxel_downsample(once, 0.07);
    ASSERT_EQ(once.size(), twice.size());
    for (std::size_t i = 0; i < once.size(); ++i)
      EXPECT_EQ(once.points[i], twice.points[i]);
  }
}

TEST(VoxelDownsample, RejectsNonPositiveVoxel) {
  EXPECT_THROW(voxel_downsample(ts::random_cloud(1, 100), 0.0), std::invalid_argument);
  EXPECT_THROW(voxel_downsample(ts::random_cloud(1, 100), -0.1), std::invalid_argument);
}

// ---- KdTree -----------------------------------------------------------------

TEST(KdTree, MatchesBruteForceKnn) {
  const auto cloud = ts::random_cloud(51, 1000);
  KdTree tree(cloud);
  fflogo::Rng rng(52);
  for (int q = 0; q < 200; ++q) {
    const Eigen::Vector3d query(rng.uniform(-0.2, 1.2), rng.uniform(-0.2, 1.2),
                                rng.uniform(-0.2, 1.2));
    for (int k : {1, 5, 17}) {
      EXPECT_EQ(tree.knn(query, k), ts::brute_force_knn(cloud, query, k));
    }
  }
}

TEST(KdTree, MatchesBruteForceKnnWithTies) {
  // Regular grid: plenty of exactly equidistant neighbors.
  PointCloud cloud;
  for (int x = 0; x < 6; ++x)
    for (int y = 0; y < 6; ++y)
      for (int z = 0; z < 6; ++z) cloud.points.emplace_back(x, y, z);
  KdTree tree(cloud);
  for (std::size_t i = 0; i < cloud.size(); i += 7) {
    for (int k : {1, 4, 9})
      EXPECT_EQ(tree.knn(cloud.points[i], k), ts::brute_force_knn(cloud, cloud.points[i], k));
  }
}

TEST(KdTree, MatchesBruteForceRadius) {
  const auto cloud = ts::random_cloud(53, 800);
  KdTree tree(cloud);
  fflogo::Rng rng(54);
  for (int q = 0; q < 100; ++q) {
    const Eigen::Vector3d query(rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0),
                                rng.uniform(0.0, 1.0));
    const double r = rng.uniform(0.0, 0.4);
    EXPECT_EQ(tree.radius(query, r), ts::brute_force_radius(cloud, query, r));
  }
}

TEST(KdTree, ExistingPointIsItsOwnNearest) {
  const auto cloud = ts::random_cloud(55, 300);
  KdTree tree(cloud);
  std::vector<double> d2;
  const auto found = tree.knn(cloud.points[123], 1, &d2);
  EXPECT_EQ(found[0], 123);
  EXPECT_EQ(d2[0], 0.0);
}

TEST(KdTree, ZeroRadiusFindsOnlyCoincidentPoints) {
  PointCloud cloud;
  cloud.points = {{0, 0, 0}, {1, 1, 1}, {0, 0, 0}, {2, 0, 0}};
  KdTree tree(cloud);
  EXPECT_EQ(tree.radius({0, 0, 0}, 0.0), (std::vector<int>{0, 2}));
  EXPECT_TRUE(tree.radius({0.5, 0, 0}, 0.0).empty());
}

TEST(KdTree, RejectsEmptyCloud) {
  EXPECT_THROW(KdTree tree{PointCloud{}}, std::invalid_argument);
}

// ---- estimate_normals ---------------------------------------------------------

TEST(EstimateNormals, PlanarCloudGetsPlaneNormal) {
  fflogo::Rng rng(61);
  PointCloud cloud;
  for (int i = 0; i < 100; ++i)
    cloud.points.emplace_back(rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), 0.0);
  const auto with_normals = estimate_normals(cloud, 10);
  for (std::size_t i = 0; i < with_normals.size(); ++i) {
    ASSERT_TRUE(with_normals.normal_valid[i]);
    EXPECT_LT(std::abs(std::abs(with_normals.normals[i].z()) - 1.0), 1e-6);
  }
}

TEST(EstimateNormals, SphereNormalsPointAlongRadius) {
  PointCloud cloud;
  fflogo::Rng rng(62);
  for (int i = 0; i < 2000; ++i) cloud.points.push_back(rng.unit_vector3());
  const auto with_normals = estimate_normals(cloud, 20);
  int checked = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!with_normals.normal_valid[i]) continue;
    const double cosine = std::abs(with_normals.normals[i].dot(cloud.points[i].normalized()));
    EXPECT_GT(cosine, std::cos(5.0 * M_PI / 180.0));
    ++checked;
  }
  EXPECT_GT(checked, 1900);
}

TEST(EstimateNormals, CollinearNeighborhoodIsFlaggedInvalid) {
  PointCloud cloud;
  cloud.points = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  const auto with_normals = estimate_normals(cloud, 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) EXPECT_FALSE(with_normals.normal_valid[i]);
}

TEST(EstimateNormals, OrientationFacesViewpoint) {
  // Points on a sphere; normals oriented toward the centroid point inward.
  PointCloud cloud;
  fflogo::Rng rng(63);
  for (int i = 0; i < 500; ++i) cloud.points.push_back(rng.unit_vector3());
  const auto with_normals = estimate_normals(cloud, 15);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!with_normals.normal_valid[i]) continue;
    EXPECT_LT(with_normals.normals[i].dot(cloud.points[i]), 0.0);
  }
}

TEST(EstimateNormals, RequiresEnoughPoints) {
  EXPECT_THROW(estimate_normals(ts::random_cloud(1, 10), 10), std::invalid_argument);
  EXPECT_THROW(estimate_normals(ts::random_cloud(1, 10), 2), std::invalid_argument);
}

// ---- select_points --------------------------------------------------------------

TEST(SelectPoints, CarriesNormalsAndFlags) {
  PointCloud cloud;
  cloud.points = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  cloud.normals = {{0, 0, 1}, {0, 1, 0}, {1, 0, 0}};
  cloud.normal_valid = {1, 0, 1};
  const auto sub = select_points(cloud, {2, 0});
  ASSERT_EQ(sub.size(), 2u);
  EXPECT_EQ(sub.points[0], Eigen::Vector3d(2, 0, 0));
  EXPECT_EQ(sub.normals[1], Eigen::Vector3d(0, 0, 1));
  EXPECT_EQ(sub.normal_valid[0], 1);
  EXPECT_THROW(select_points(cloud, {5}), std::out_of_range);
}
