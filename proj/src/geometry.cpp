#include "iosvqa/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "iosvqa/error.hpp"
#include "iosvqa/random.hpp"

namespace iosvqa {

namespace {

const Eigen::Vector3d kFallbackGcp = Eigen::Vector3d::Constant(1.0 / std::sqrt(3.0));

// Relative eigenvalue floor below which the second principal direction is
// considered absent (colinear or coincident input).
constexpr double kRankTolerance = 1e-12;

// Sign of `axis` chosen so the point with the largest |projection| (lowest
// index on ties) lands on the positive side.
Eigen::Vector3d fix_sign(const Eigen::Vector3d& axis, const std::vector<Eigen::Vector3d>& positions,
                         const Eigen::Vector3d& centroid) {
    double best = -1.0;
    double best_proj = 0.0;
    for (const auto& p : positions) {
        const double proj = axis.dot(p - centroid);
        if (std::abs(proj) > best) {
            best = std::abs(proj);
            best_proj = proj;
        }
    }
    return best_proj < 0.0 ? Eigen::Vector3d(-axis) : axis;
}

} // namespace

void RigidTransform::validate() const {
    if (!rotation.allFinite() || !translation.allFinite())
        throw Error(ErrorCode::InvalidArgument, "transform has non-finite entries");
    const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    const double det = rotation.determinant();
    if (ortho > 1e-9 || std::abs(det - 1.0) > 1e-9)
        throw Error(ErrorCode::InvalidArgument, "rotation is not orthonormal with determinant +1");
}

OrientedPointSet face_centroids(const TriangleMesh& mesh) {
    if (mesh.faces.empty()) throw Error(ErrorCode::EmptyMesh, "mesh has no faces");
    OrientedPointSet out;
    out.positions.reserve(mesh.faces.size());
    out.normals.reserve(mesh.faces.size());
    for (const auto& f : mesh.faces) {
        const Eigen::Vector3d& a = mesh.vertices[f[0]];
        const Eigen::Vector3d& b = mesh.vertices[f[1]];
        const Eigen::Vector3d& c = mesh.vertices[f[2]];
        out.positions.push_back((a + b + c) / 3.0);
        out.normals.push_back((b - a).cross(c - a));
    }
    return out;
}

Eigen::Vector3d gcp(const Eigen::Vector3d& normal) {
    if (!normal.allFinite()) return kFallbackGcp;
    const double largest = normal.cwiseAbs().maxCoeff();
    if (largest == 0.0) return kFallbackGcp;
    // Pre-scaling keeps the squares in range; summing sorted squares makes the
    // length independent of component order, so signed permutations commute
    // with the map exactly.
    const Eigen::Vector3d u = normal / largest;
    std::array<double, 3> sq{u.x() * u.x(), u.y() * u.y(), u.z() * u.z()};
    std::sort(sq.begin(), sq.end());
    const double length = std::sqrt(sq[0] + sq[1] + sq[2]);
    if (largest * length <= kZeroNormalEps) return kFallbackGcp;
    Eigen::Vector3d out;
    for (int i = 0; i < 3; ++i) out[i] = std::min(1.0, std::abs(u[i]) / length);
    return out;
}

CanonicalPose canonicalize_pose(const OrientedPointSet& points, const std::optional<RigidTransform>& transform) {
    CanonicalPose result;
    if (transform) {
        transform->validate();
        result.transform = *transform;
    } else {
        const auto& pos = points.positions;
        if (pos.size() < 3)
            throw Error(ErrorCode::DegenerateConfiguration, "PCA frame needs at least 3 points, got " + std::to_string(pos.size()));
        Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
        for (const auto& p : pos) centroid += p;
        centroid /= static_cast<double>(pos.size());
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (const auto& p : pos) {
            const Eigen::Vector3d d = p - centroid;
            cov.noalias() += d * d.transpose();
        }
        cov /= static_cast<double>(pos.size());

        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
        if (solver.info() != Eigen::Success)
            throw Error(ErrorCode::DegenerateConfiguration, "eigen decomposition failed");
        // Ascending eigenvalues; the principal axis is the last column.
        const Eigen::Vector3d lambda = solver.eigenvalues();
        if (!(lambda[2] > 0.0) || lambda[1] <= kRankTolerance * lambda[2])
            throw Error(ErrorCode::DegenerateConfiguration, "points are colinear or coincident");

        const Eigen::Vector3d first = fix_sign(solver.eigenvectors().col(2), pos, centroid);
        const Eigen::Vector3d second = fix_sign(solver.eigenvectors().col(1), pos, centroid);
        // Third axis completes a right-handed frame so the result is a rotation.
        const Eigen::Vector3d third = first.cross(second).normalized();

        result.transform.rotation.row(0) = first.transpose();
        result.transform.rotation.row(1) = second.transpose();
        result.transform.rotation.row(2) = third.transpose();
        result.transform.translation = -(result.transform.rotation * centroid);
    }

    const auto& t = result.transform;
    result.points.positions.reserve(points.size());
    result.points.normals.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        result.points.positions.push_back(t.apply(points.positions[i]));
        result.points.normals.push_back(t.rotation * points.normals[i]);
    }
    return result;
}

NormalizedPoints normalize_unit(const OrientedPointSet& points) {
    const std::size_t n = points.size();
    if (n == 0) throw Error(ErrorCode::EmptyInput, "cannot normalize an empty point set");
    NormalizedPoints out;
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& p : points.positions) centroid += p;
    centroid /= static_cast<double>(n);
    double scale = 0.0;
    for (const auto& p : points.positions) scale = std::max(scale, (p - centroid).norm());
    if (n == 1) {
        scale = 1.0;
    } else if (scale == 0.0) {
        throw Error(ErrorCode::ZeroExtent, "all " + std::to_string(n) + " points coincide");
    }
    out.normalization = {centroid, scale};
    out.points.normals = points.normals;
    out.points.positions.reserve(n);
    for (const auto& p : points.positions) out.points.positions.push_back((p - centroid) / scale);
    return out;
}

OrientedPointSet downsample_random(const OrientedPointSet& points, std::size_t n_target, std::uint64_t seed) {
    if (points.size() == 0) throw Error(ErrorCode::EmptyInput, "cannot sample from an empty point set");
    if (n_target == 0) throw Error(ErrorCode::InvalidArgument, "n_target must be at least 1");
    OrientedPointSet out;
    out.positions.reserve(n_target);
    out.normals.reserve(n_target);
    for (std::size_t idx : sample_indices(points.size(), n_target, seed)) {
        out.positions.push_back(points.positions[idx]);
        out.normals.push_back(points.normals[idx]);
    }
    return out;
}

PointCloud mesh_to_pointcloud(const TriangleMesh& mesh, const PipelineOptions& options) {
    OrientedPointSet points = face_centroids(mesh);

    switch (options.registration) {
    case Registration::None: break;
    case Registration::Pca: points = canonicalize_pose(points).points; break;
    case Registration::Transform:
        if (!options.transform) throw Error(ErrorCode::InvalidArgument, "transform registration without a transform");
        points = canonicalize_pose(points, options.transform).points;
        break;
    }

    PointCloud cloud;
    cloud.seed = options.seed;
    if (options.normalize) {
        auto normalized = normalize_unit(points);
        points = std::move(normalized.points);
        cloud.normalization = normalized.normalization;
    }

    const OrientedPointSet sampled = downsample_random(points, options.n_points, options.seed);
    cloud.points.reserve(sampled.size());
    for (std::size_t i = 0; i < sampled.size(); ++i) {
        const auto& p = sampled.positions[i];
        const Eigen::Vector3d g = gcp(sampled.normals[i]);
        cloud.points.push_back({static_cast<float>(p.x()), static_cast<float>(p.y()), static_cast<float>(p.z()),
                                static_cast<float>(g.x()), static_cast<float>(g.y()), static_cast<float>(g.z())});
    }
    return cloud;
}

} // namespace iosvqa
