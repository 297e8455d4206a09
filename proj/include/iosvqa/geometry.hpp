#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "iosvqa/mesh_io.hpp"

namespace iosvqa {

// Dense per-face samples: one position and one (unnormalized) normal per face.
struct OrientedPointSet {
    std::vector<Eigen::Vector3d> positions;
    std::vector<Eigen::Vector3d> normals;

    std::size_t size() const { return positions.size(); }
};

struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

    // Throws InvalidArgument unless rotation is orthonormal with det +1 (1e-9).
    void validate() const;
};

struct Normalization {
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    double scale = 1.0;
};

inline constexpr std::size_t kPointChannels = 6;
using PointRow = std::array<float, kPointChannels>;

// Encoder input: N rows of (x, y, z, g1, g2, g3).
struct PointCloud {
    std::vector<PointRow> points;
    Normalization normalization;
    std::uint64_t seed = 0;

    std::size_t size() const { return points.size(); }
};

inline constexpr double kZeroNormalEps = 1e-12;

OrientedPointSet face_centroids(const TriangleMesh& mesh);

// Flip-robust normal to pseudo-color map: |n / ||n|||. Vectors with norm at
// or below kZeroNormalEps (or non-finite ones) map to (1,1,1)/sqrt(3).
Eigen::Vector3d gcp(const Eigen::Vector3d& normal);

struct CanonicalPose {
    OrientedPointSet points;
    RigidTransform transform;
};

// With a transform: applies it (rotation only for normals). Without: moves the
// centroid to the origin and rotates onto the principal axes.
CanonicalPose canonicalize_pose(const OrientedPointSet& points, const std::optional<RigidTransform>& transform = {});

struct NormalizedPoints {
    OrientedPointSet points;
    Normalization normalization;
};

NormalizedPoints normalize_unit(const OrientedPointSet& points);

OrientedPointSet downsample_random(const OrientedPointSet& points, std::size_t n_target, std::uint64_t seed);

enum class Registration { None, Pca, Transform };

struct PipelineOptions {
    std::size_t n_points = 10'000;
    std::uint64_t seed = 0;
    bool normalize = true;
    Registration registration = Registration::Pca;
    std::optional<RigidTransform> transform; // used when registration == Transform
};

PointCloud mesh_to_pointcloud(const TriangleMesh& mesh, const PipelineOptions& options);

} // namespace iosvqa
