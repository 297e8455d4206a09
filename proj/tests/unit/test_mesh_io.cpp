#include <doctest.h>

#include <cstring>

#include "iosvqa/error.hpp"
#include "iosvqa/mesh_io.hpp"
#include "support/oracles.hpp"

using namespace iosvqa;
using oracle::bytes_of;

namespace {

ErrorCode error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an iosvqa::Error");
    return ErrorCode::Io;
}

std::vector<std::uint8_t> one_triangle_stl() {
    std::vector<std::uint8_t> out(84 + 50, 0);
    const std::uint32_t count = 1;
    std::memcpy(out.data() + 80, &count, 4);
    const float coords[12] = {0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0};
    std::memcpy(out.data() + 84, coords, sizeof(coords));
    return out;
}

TriangleMesh one_triangle() {
    TriangleMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    m.faces = {{0, 1, 2}};
    return m;
}

} // namespace

TEST_CASE("binary STL with one triangle") {
    const auto bytes = one_triangle_stl();
    CHECK(detect_format(bytes) == MeshFormat::StlBinary);
    const auto mesh = parse_mesh(bytes, MeshFormat::StlBinary);
    CHECK(mesh.vertices.size() == 3);
    CHECK(mesh.faces.size() == 1);
    CHECK(same_geometry(mesh, one_triangle()));
}

TEST_CASE("STL welds identical vertices in first-occurrence order") {
    TriangleMesh two;
    two.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    two.faces = {{0, 1, 2}, {2, 1, 3}};
    const auto bytes = write_mesh(two, MeshFormat::StlBinary);
    CHECK(bytes.size() == 84 + 50 * 2);
    CHECK(same_geometry(parse_mesh(bytes, MeshFormat::StlBinary), two));
}

TEST_CASE("OBJ quad is fan-triangulated") {
    const std::string obj = "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\n";
    const auto mesh = parse_mesh(bytes_of(obj), MeshFormat::Obj);
    REQUIRE(mesh.faces.size() == 2);
    CHECK(mesh.faces[0] == Face{0, 1, 2});
    CHECK(mesh.faces[1] == Face{0, 2, 3});

    MeshParseOptions strict;
    strict.triangulate = false;
    CHECK(error_of([&] { parse_mesh(bytes_of(obj), MeshFormat::Obj, strict); }) == ErrorCode::MalformedFile);
}

TEST_CASE("OBJ negative indices are relative to the current vertex count") {
    const std::string obj = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\nv 0 0 1\nf 1 2 -1\n";
    const auto mesh = parse_mesh(bytes_of(obj), MeshFormat::Obj);
    REQUIRE(mesh.faces.size() == 2);
    CHECK(mesh.faces[0] == Face{0, 1, 2});
    CHECK(mesh.faces[1] == Face{0, 1, 3});
}

TEST_CASE("OBJ index out of range is malformed") {
    const std::string obj = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n";
    CHECK(error_of([&] { parse_mesh(bytes_of(obj), MeshFormat::Obj); }) == ErrorCode::MalformedFile);
    CHECK(error_of([&] { parse_mesh(bytes_of(std::string("v 0 0 0\nf 0 1 1\n")), MeshFormat::Obj); }) ==
          ErrorCode::MalformedFile);
}

TEST_CASE("PLY declaring 5 vertices but providing 4 is malformed") {
    const std::string ply = "ply\nformat ascii 1.0\nelement vertex 5\nproperty float x\nproperty float y\nproperty float z\n"
                            "element face 1\nproperty list uchar int vertex_indices\nend_header\n"
                            "0 0 0\n1 0 0\n0 1 0\n1 1 0\n3 0 1 2\n";
    CHECK(error_of([&] { parse_mesh(bytes_of(ply), MeshFormat::PlyAscii); }) == ErrorCode::MalformedFile);
}

TEST_CASE("empty mesh round trips through ASCII PLY") {
    const auto bytes = write_mesh(TriangleMesh{}, MeshFormat::PlyAscii);
    const std::string text(bytes.begin(), bytes.end());
    CHECK(text.find("element vertex 0") != std::string::npos);
    CHECK(text.find("element face 0") != std::string::npos);
    CHECK(parse_mesh(bytes, MeshFormat::PlyAscii).empty());
}

TEST_CASE("big-endian PLY is unsupported") {
    const std::string ply = "ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n";
    CHECK(error_of([&] { detect_format(bytes_of(ply)); }) == ErrorCode::UnsupportedFormat);
}

TEST_CASE("PLY with extra vertex properties and float32 coordinates") {
    const std::string ply = "ply\nformat ascii 1.0\ncomment scanner\nelement vertex 3\nproperty float x\nproperty float y\n"
                            "property float z\nproperty uchar red\nelement face 1\nproperty list uchar int vertex_indices\n"
                            "end_header\n0 0 0 255\n1 0 0 0\n0 1 0 7\n3 0 1 2\n";
    CHECK(same_geometry(parse_mesh(bytes_of(ply), MeshFormat::PlyAscii), one_triangle()));
}

TEST_CASE("format detection") {
    const std::string ascii_stl = "solid t\nfacet normal 0 0 1\nouter loop\nvertex 0 0 0\nvertex 1 0 0\nvertex 0 1 0\n"
                                  "endloop\nendfacet\nendsolid t\n";
    CHECK(detect_format(bytes_of(ascii_stl)) == MeshFormat::StlAscii);
    CHECK(same_geometry(parse_mesh(bytes_of(ascii_stl), MeshFormat::StlAscii), one_triangle()));

    // A binary STL whose header starts with "solid" is still binary.
    auto bin = one_triangle_stl();
    std::memcpy(bin.data(), "solid", 5);
    CHECK(detect_format(bin) == MeshFormat::StlBinary);

    CHECK(detect_format(bytes_of(std::string("v 0 0 0\n")), "x.obj") == MeshFormat::Obj);
    CHECK(detect_format(bytes_of(std::string("v 0 0 0\nv 1 0 0\n"))) == MeshFormat::Obj);
    CHECK(error_of([] { detect_format(bytes_of(std::string("hello world"))); }) == ErrorCode::UnknownFormat);
}

TEST_CASE("degenerate faces are dropped and counted, or rejected") {
    const std::string obj = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\nf 1 1 2\n";
    const auto mesh = parse_mesh(bytes_of(obj), MeshFormat::Obj);
    CHECK(mesh.faces.size() == 1);
    CHECK(mesh.provenance.dropped_degenerate_faces == 1);

    MeshParseOptions reject;
    reject.degenerate = DegeneratePolicy::Reject;
    CHECK(error_of([&] { parse_mesh(bytes_of(obj), MeshFormat::Obj, reject); }) == ErrorCode::DegenerateTopology);
    CHECK(error_of([&] { parse_mesh(bytes_of(std::string("v 0 0 0\nv 1 0 0\nf 1 1 2\n")), MeshFormat::Obj); }) ==
          ErrorCode::DegenerateTopology);
}

TEST_CASE("non-finite coordinates are malformed") {
    const std::string obj = "v 0 0 nan\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
    CHECK(error_of([&] { parse_mesh(bytes_of(obj), MeshFormat::Obj); }) == ErrorCode::MalformedFile);
}

TEST_CASE("round trips for every format") {
    const auto mesh = oracle::random_mesh(11, 300, 1000);
    for (auto f : {MeshFormat::StlBinary, MeshFormat::StlAscii, MeshFormat::Obj, MeshFormat::PlyAscii, MeshFormat::PlyBinaryLe}) {
        CAPTURE(to_string(f));
        const auto bytes = write_mesh(mesh, f);
        CHECK(detect_format(bytes, f == MeshFormat::Obj ? "m.obj" : "") == f);
        const auto back = parse_mesh(bytes, f);
        CHECK(same_geometry(back, mesh));
        CHECK(write_mesh(back, f) == bytes);
    }
    CHECK(write_mesh(mesh, MeshFormat::StlBinary).size() == 84 + 50 * mesh.faces.size());
}

TEST_CASE("10,000-triangle mesh round trips") {
    const auto mesh = oracle::random_mesh(2024, 5000, 10'000);
    for (auto f : {MeshFormat::StlBinary, MeshFormat::PlyBinaryLe, MeshFormat::Obj})
        CHECK(same_geometry(parse_mesh(write_mesh(mesh, f), f), mesh));
}

TEST_CASE("double-precision coordinates survive OBJ and PLY exactly") {
    TriangleMesh m = one_triangle();
    m.vertices[1] = {0.1, 1.0 / 3.0, -2.718281828459045};
    for (auto f : {MeshFormat::Obj, MeshFormat::PlyAscii, MeshFormat::PlyBinaryLe})
        CHECK(same_geometry(parse_mesh(write_mesh(m, f), f), m));
}

TEST_CASE("write_mesh rejects invalid meshes") {
    TriangleMesh m = one_triangle();
    m.faces[0][2] = 9;
    CHECK(error_of([&] { write_mesh(m, MeshFormat::Obj); }) == ErrorCode::MalformedFile);
    m.faces[0] = {0, 0, 1};
    CHECK(error_of([&] { write_mesh(m, MeshFormat::Obj); }) == ErrorCode::DegenerateTopology);
}

TEST_CASE("corrupted inputs raise errors, never crash") {
    const auto mesh = oracle::random_mesh(5, 40, 60);
    std::mt19937_64 rng(77);
    for (auto f : {MeshFormat::StlBinary, MeshFormat::StlAscii, MeshFormat::Obj, MeshFormat::PlyAscii, MeshFormat::PlyBinaryLe}) {
        const auto clean = write_mesh(mesh, f);
        for (int trial = 0; trial < 300; ++trial) {
            auto bytes = clean;
            if (trial % 2 == 0) bytes.resize(oracle::below(rng, bytes.size()));
            else
                for (int k = 0; k < 4; ++k) bytes[oracle::below(rng, bytes.size())] = static_cast<std::uint8_t>(rng());
            try {
                const auto parsed = parse_mesh(bytes, f);
                for (const auto& face : parsed.faces)
                    for (auto idx : face) REQUIRE(idx < parsed.vertices.size());
            } catch (const Error&) {
            }
        }
    }
}

TEST_CASE("load_mesh reports missing files") {
    CHECK(error_of([] { load_mesh("/nonexistent/file.stl"); }) == ErrorCode::Io);
}
