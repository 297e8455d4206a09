#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace iosvqa {

enum class MeshFormat { StlAscii, StlBinary, Obj, PlyAscii, PlyBinaryLe };

std::string_view to_string(MeshFormat format);

using Face = std::array<std::uint32_t, 3>;

struct MeshProvenance {
    MeshFormat format = MeshFormat::PlyBinaryLe;
    std::string path;
    // Faces dropped because they referenced the same vertex twice.
    std::size_t dropped_degenerate_faces = 0;
};

// Raw scan surface: positions in millimeters plus 0-based index triples.
struct TriangleMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<Face> faces;
    MeshProvenance provenance;

    bool empty() const { return vertices.empty() && faces.empty(); }
};

// Geometry equality: vertices bit-for-bit and identical face lists.
// Provenance is not compared.
bool same_geometry(const TriangleMesh& a, const TriangleMesh& b);

// Throws MalformedFile / DegenerateTopology when an invariant does not hold.
void validate(const TriangleMesh& mesh);

enum class DegeneratePolicy { Drop, Reject };

struct MeshParseOptions {
    bool triangulate = true;
    DegeneratePolicy degenerate = DegeneratePolicy::Drop;
};

using ByteSpan = std::span<const std::uint8_t>;

// `total_size` is the full file length when `bytes` is only a prefix; 0 means
// bytes.size().
MeshFormat detect_format(ByteSpan bytes, std::string_view path_hint = {}, std::size_t total_size = 0);

TriangleMesh parse_mesh(ByteSpan bytes, MeshFormat format, const MeshParseOptions& options = {});

std::vector<std::uint8_t> write_mesh(const TriangleMesh& mesh, MeshFormat format);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

TriangleMesh load_mesh(const std::filesystem::path& path, const MeshParseOptions& options = {});

} // namespace iosvqa
