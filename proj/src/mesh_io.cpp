#include "iosvqa/mesh_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <unordered_map>

#include "iosvqa/error.hpp"

namespace iosvqa {

namespace {

constexpr std::size_t kStlHeaderSize = 80;
constexpr std::size_t kStlTriangleSize = 50;

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedFile, what); }

// ---------------------------------------------------------------------------
// Little-endian byte access

template <typename T>
T load_le(const std::uint8_t* p) {
    if constexpr (std::is_floating_point_v<T>) {
        using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
        return std::bit_cast<T>(load_le<U>(p));
    } else {
        using U = std::make_unsigned_t<T>;
        U v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
        return static_cast<T>(v);
    }
}

template <typename T>
void store_le(std::vector<std::uint8_t>& out, T value) {
    if constexpr (std::is_floating_point_v<T>) {
        using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
        store_le<U>(out, std::bit_cast<U>(value));
    } else {
        using U = std::make_unsigned_t<T>;
        const U v = static_cast<U>(value);
        for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void append(std::vector<std::uint8_t>& out, std::string_view text) { out.insert(out.end(), text.begin(), text.end()); }

void append_number(std::vector<std::uint8_t>& out, double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    out.insert(out.end(), buf, res.ptr);
}

void append_number(std::vector<std::uint8_t>& out, std::uint64_t value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    out.insert(out.end(), buf, res.ptr);
}

std::string_view as_text(ByteSpan bytes) { return {reinterpret_cast<const char*>(bytes.data()), bytes.size()}; }

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Whitespace tokenizer over a text buffer.
class Tokens {
public:
    explicit Tokens(std::string_view text) : text_(text) {}

    std::optional<std::string_view> next() {
        while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
        if (pos_ >= text_.size()) return std::nullopt;
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !is_space(text_[pos_])) ++pos_;
        return text_.substr(start, pos_ - start);
    }

    std::string_view expect(std::string_view context) {
        auto t = next();
        if (!t) malformed("unexpected end of file in " + std::string(context));
        return *t;
    }

    void expect_keyword(std::string_view keyword) {
        const auto t = expect(keyword);
        if (lower(t) != keyword) malformed("expected '" + std::string(keyword) + "', found '" + std::string(t) + "'");
    }

    // Rest of the current line (used for the STL solid name).
    std::string_view rest_of_line() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
        return text_.substr(start, pos_ - start);
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

double parse_double(std::string_view token) {
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double value = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size())
        malformed("invalid number '" + std::string(token) + "'");
    if (!std::isfinite(value)) malformed("non-finite coordinate '" + std::string(token) + "'");
    return value;
}

std::int64_t parse_int(std::string_view token) {
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    std::int64_t value = 0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size())
        malformed("invalid integer '" + std::string(token) + "'");
    return value;
}

bool is_degenerate(const Face& f) { return f[0] == f[1] || f[1] == f[2] || f[0] == f[2]; }

// Adds a face, applying the degenerate policy.
void push_face(TriangleMesh& mesh, const Face& f, const MeshParseOptions& options) {
    if (is_degenerate(f)) {
        if (options.degenerate == DegeneratePolicy::Reject)
            throw Error(ErrorCode::DegenerateTopology,
                        "face " + std::to_string(mesh.faces.size()) + " repeats a vertex index");
        ++mesh.provenance.dropped_degenerate_faces;
        return;
    }
    mesh.faces.push_back(f);
}

void push_polygon(TriangleMesh& mesh, const std::vector<std::uint32_t>& poly, const MeshParseOptions& options) {
    if (poly.size() < 3) malformed("face with fewer than 3 vertices");
    if (poly.size() > 3 && !options.triangulate)
        malformed("non-triangular face with " + std::to_string(poly.size()) + " vertices (triangulation disabled)");
    for (std::size_t i = 1; i + 1 < poly.size(); ++i) push_face(mesh, {poly[0], poly[i], poly[i + 1]}, options);
}

void finish(TriangleMesh& mesh) {
    const auto n = mesh.vertices.size();
    for (const auto& f : mesh.faces)
        for (auto idx : f)
            if (idx >= n) malformed("face index " + std::to_string(idx) + " out of range");
    if (mesh.faces.empty() && !mesh.vertices.empty()) {
        if (mesh.provenance.dropped_degenerate_faces > 0)
            throw Error(ErrorCode::DegenerateTopology, "every face was degenerate");
        malformed("file has vertices but no faces");
    }
}

// ---------------------------------------------------------------------------
// STL

struct BitKey {
    std::uint64_t x, y, z;
    bool operator==(const BitKey&) const = default;
};

struct BitKeyHash {
    std::size_t operator()(const BitKey& k) const noexcept {
        std::uint64_t h = k.x * 0x9e3779b97f4a7c15ULL;
        h ^= k.y + 0x7f4a7c159e3779b9ULL + (h << 6) + (h >> 2);
        h ^= k.z + 0x94d049bb133111ebULL + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

// Welds a triangle soup by exact bit equality; vertex order is first occurrence.
class SoupBuilder {
public:
    SoupBuilder(TriangleMesh& mesh, const MeshParseOptions& options) : mesh_(mesh), options_(options) {}

    void add(const std::array<Eigen::Vector3d, 3>& tri) {
        std::array<BitKey, 3> keys;
        for (int i = 0; i < 3; ++i) {
            keys[i] = {std::bit_cast<std::uint64_t>(tri[i].x()), std::bit_cast<std::uint64_t>(tri[i].y()),
                       std::bit_cast<std::uint64_t>(tri[i].z())};
        }
        if (keys[0] == keys[1] || keys[1] == keys[2] || keys[0] == keys[2]) {
            // Same vertex twice; route through the common policy without
            // introducing vertices that no kept face references.
            push_face(mesh_, {0, 0, 0}, options_);
            return;
        }
        Face f{};
        for (int i = 0; i < 3; ++i) {
            auto [it, inserted] = index_.try_emplace(keys[i], static_cast<std::uint32_t>(mesh_.vertices.size()));
            if (inserted) mesh_.vertices.push_back(tri[i]);
            f[i] = it->second;
        }
        mesh_.faces.push_back(f);
    }

private:
    TriangleMesh& mesh_;
    const MeshParseOptions& options_;
    std::unordered_map<BitKey, std::uint32_t, BitKeyHash> index_;
};

void check_finite(const Eigen::Vector3d& v) {
    if (!v.allFinite()) malformed("non-finite coordinate");
}

TriangleMesh parse_stl_binary(ByteSpan bytes, const MeshParseOptions& options) {
    if (bytes.size() < kStlHeaderSize + 4) malformed("binary STL shorter than 84 bytes");
    const std::uint64_t count = load_le<std::uint32_t>(bytes.data() + kStlHeaderSize);
    const std::uint64_t expected = kStlHeaderSize + 4 + kStlTriangleSize * count;
    if (bytes.size() != expected)
        malformed("binary STL size " + std::to_string(bytes.size()) + " does not match " + std::to_string(count) +
                  " triangles (" + std::to_string(expected) + " bytes)");
    TriangleMesh mesh;
    mesh.provenance.format = MeshFormat::StlBinary;
    mesh.vertices.reserve(count / 2 + 3);
    mesh.faces.reserve(count);
    SoupBuilder soup(mesh, options);
    const std::uint8_t* p = bytes.data() + kStlHeaderSize + 4;
    for (std::uint64_t t = 0; t < count; ++t, p += kStlTriangleSize) {
        std::array<Eigen::Vector3d, 3> tri;
        for (int v = 0; v < 3; ++v) {
            const std::uint8_t* q = p + 12 + 12 * v;
            tri[v] = {load_le<float>(q), load_le<float>(q + 4), load_le<float>(q + 8)};
            check_finite(tri[v]);
        }
        soup.add(tri);
    }
    finish(mesh);
    return mesh;
}

TriangleMesh parse_stl_ascii(ByteSpan bytes, const MeshParseOptions& options) {
    TriangleMesh mesh;
    mesh.provenance.format = MeshFormat::StlAscii;
    SoupBuilder soup(mesh, options);
    Tokens tok(as_text(bytes));
    tok.expect_keyword("solid");
    tok.rest_of_line();
    bool closed = false;
    while (auto t = tok.next()) {
        const std::string word = lower(*t);
        if (word == "endsolid") {
            tok.rest_of_line();
            closed = true;
            continue;
        }
        if (word == "solid") {
            tok.rest_of_line();
            closed = false;
            continue;
        }
        if (word != "facet") malformed("expected 'facet', found '" + std::string(*t) + "'");
        if (closed) malformed("facet outside of a solid");
        tok.expect_keyword("normal");
        for (int i = 0; i < 3; ++i) parse_double(tok.expect("facet normal"));
        tok.expect_keyword("outer");
        tok.expect_keyword("loop");
        std::array<Eigen::Vector3d, 3> tri;
        for (auto& v : tri) {
            tok.expect_keyword("vertex");
            const double x = parse_double(tok.expect("vertex"));
            const double y = parse_double(tok.expect("vertex"));
            const double z = parse_double(tok.expect("vertex"));
            v = {x, y, z};
        }
        tok.expect_keyword("endloop");
        tok.expect_keyword("endfacet");
        soup.add(tri);
    }
    if (!closed) malformed("missing 'endsolid'");
    finish(mesh);
    return mesh;
}

std::array<float, 3> unit_normal_f32(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
    Eigen::Vector3d n = (b - a).cross(c - a);
    const double len = n.norm();
    if (len > 0.0 && std::isfinite(len)) n /= len;
    else n.setZero();
    return {static_cast<float>(n.x()), static_cast<float>(n.y()), static_cast<float>(n.z())};
}

std::vector<std::uint8_t> write_stl_binary(const TriangleMesh& mesh) {
    std::vector<std::uint8_t> out;
    out.reserve(kStlHeaderSize + 4 + kStlTriangleSize * mesh.faces.size());
    std::string header = "binary STL written by iosvqa";
    header.resize(kStlHeaderSize, ' ');
    append(out, header);
    store_le<std::uint32_t>(out, static_cast<std::uint32_t>(mesh.faces.size()));
    for (const auto& f : mesh.faces) {
        const auto& a = mesh.vertices[f[0]];
        const auto& b = mesh.vertices[f[1]];
        const auto& c = mesh.vertices[f[2]];
        for (float v : unit_normal_f32(a, b, c)) store_le<float>(out, v);
        for (const auto* v : {&a, &b, &c})
            for (int i = 0; i < 3; ++i) store_le<float>(out, static_cast<float>((*v)[i]));
        store_le<std::uint16_t>(out, 0);
    }
    return out;
}

std::vector<std::uint8_t> write_stl_ascii(const TriangleMesh& mesh) {
    std::vector<std::uint8_t> out;
    append(out, "solid iosvqa\n");
    for (const auto& f : mesh.faces) {
        const auto& a = mesh.vertices[f[0]];
        const auto& b = mesh.vertices[f[1]];
        const auto& c = mesh.vertices[f[2]];
        append(out, "  facet normal");
        for (float v : unit_normal_f32(a, b, c)) {
            append(out, " ");
            append_number(out, static_cast<double>(v));
        }
        append(out, "\n    outer loop\n");
        for (const auto* v : {&a, &b, &c}) {
            append(out, "      vertex");
            for (int i = 0; i < 3; ++i) {
                append(out, " ");
                append_number(out, (*v)[i]);
            }
            append(out, "\n");
        }
        append(out, "    endloop\n  endfacet\n");
    }
    append(out, "endsolid iosvqa\n");
    return out;
}

// ---------------------------------------------------------------------------
// OBJ

TriangleMesh parse_obj(ByteSpan bytes, const MeshParseOptions& options) {
    TriangleMesh mesh;
    mesh.provenance.format = MeshFormat::Obj;
    const std::string_view text = as_text(bytes);
    std::vector<std::uint32_t> poly;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        Tokens tok(line);
        const auto head = tok.next();
        if (!head) continue;
        try {
            if (*head == "v") {
                Eigen::Vector3d v;
                for (int i = 0; i < 3; ++i) v[i] = parse_double(tok.expect("v record"));
                mesh.vertices.push_back(v);
            } else if (*head == "f") {
                poly.clear();
                while (auto ref = tok.next()) {
                    const std::string_view idx_text = ref->substr(0, ref->find('/'));
                    const std::int64_t idx = parse_int(idx_text);
                    const auto count = static_cast<std::int64_t>(mesh.vertices.size());
                    std::int64_t resolved = 0;
                    if (idx > 0) resolved = idx - 1;
                    else if (idx < 0) resolved = count + idx;
                    else malformed("vertex index 0");
                    if (resolved < 0 || resolved > std::numeric_limits<std::uint32_t>::max())
                        malformed("vertex index " + std::string(idx_text) + " out of range");
                    poly.push_back(static_cast<std::uint32_t>(resolved));
                }
                push_polygon(mesh, poly, options);
            }
            // vn, vt, usemtl, o, g, s and friends are not needed.
        } catch (const Error& e) {
            throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.detail());
        }
    }
    finish(mesh);
    return mesh;
}

std::vector<std::uint8_t> write_obj(const TriangleMesh& mesh) {
    std::vector<std::uint8_t> out;
    append(out, "# iosvqa\n");
    for (const auto& v : mesh.vertices) {
        append(out, "v");
        for (int i = 0; i < 3; ++i) {
            append(out, " ");
            append_number(out, v[i]);
        }
        append(out, "\n");
    }
    for (const auto& f : mesh.faces) {
        append(out, "f");
        for (auto idx : f) {
            append(out, " ");
            append_number(out, static_cast<std::uint64_t>(idx) + 1);
        }
        append(out, "\n");
    }
    return out;
}

// ---------------------------------------------------------------------------
// PLY

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<PlyType> ply_type(std::string_view name) {
    if (name == "char" || name == "int8") return PlyType::Int8;
    if (name == "uchar" || name == "uint8") return PlyType::UInt8;
    if (name == "short" || name == "int16") return PlyType::Int16;
    if (name == "ushort" || name == "uint16") return PlyType::UInt16;
    if (name == "int" || name == "int32") return PlyType::Int32;
    if (name == "uint" || name == "uint32") return PlyType::UInt32;
    if (name == "float" || name == "float32") return PlyType::Float32;
    if (name == "double" || name == "float64") return PlyType::Float64;
    return std::nullopt;
}

std::size_t ply_size(PlyType t) {
    switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
    }
    return 0;
}

bool ply_is_integer(PlyType t) { return t != PlyType::Float32 && t != PlyType::Float64; }

struct PlyProperty {
    std::string name;
    bool is_list = false;
    PlyType count_type = PlyType::UInt8;
    PlyType value_type = PlyType::Float32;
};

struct PlyElement {
    std::string name;
    std::uint64_t count = 0;
    std::vector<PlyProperty> properties;
};

struct PlyHeader {
    bool ascii = true;
    std::vector<PlyElement> elements;
    std::size_t body_offset = 0;
};

PlyHeader parse_ply_header(ByteSpan bytes) {
    const std::string_view text = as_text(bytes);
    PlyHeader header;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool saw_format = false;
    for (;;) {
        const std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) malformed("PLY header not terminated by end_header");
        const std::string_view line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        Tokens tok(line);
        const auto head = tok.next();
        if (line_no == 1) {
            if (!head || *head != "ply") malformed("missing 'ply' magic");
            continue;
        }
        if (!head) continue;
        if (*head == "end_header") break;
        if (*head == "comment" || *head == "obj_info") continue;
        if (*head == "format") {
            const auto kind = tok.expect("format line");
            if (kind == "ascii") header.ascii = true;
            else if (kind == "binary_little_endian") header.ascii = false;
            else if (kind == "binary_big_endian")
                throw Error(ErrorCode::UnsupportedFormat, "big-endian PLY is not supported");
            else malformed("unknown PLY format '" + std::string(kind) + "'");
            saw_format = true;
        } else if (*head == "element") {
            PlyElement el;
            el.name = std::string(tok.expect("element line"));
            const std::int64_t count = parse_int(tok.expect("element line"));
            if (count < 0) malformed("negative element count");
            el.count = static_cast<std::uint64_t>(count);
            header.elements.push_back(std::move(el));
        } else if (*head == "property") {
            if (header.elements.empty()) malformed("property before any element");
            PlyProperty prop;
            auto type_name = tok.expect("property line");
            if (type_name == "list") {
                prop.is_list = true;
                const auto ct = ply_type(tok.expect("property list"));
                const auto vt = ply_type(tok.expect("property list"));
                if (!ct || !vt || !ply_is_integer(*ct)) malformed("bad list property types");
                prop.count_type = *ct;
                prop.value_type = *vt;
            } else {
                const auto t = ply_type(type_name);
                if (!t) malformed("unknown PLY type '" + std::string(type_name) + "'");
                prop.value_type = *t;
            }
            prop.name = std::string(tok.expect("property line"));
            header.elements.back().properties.push_back(std::move(prop));
        } else {
            malformed("unexpected PLY header line '" + std::string(line) + "'");
        }
    }
    if (!saw_format) malformed("PLY header lacks a format line");
    header.body_offset = pos;
    return header;
}

// Reads scalar values out of either encoding.
class PlyReader {
public:
    PlyReader(ByteSpan body, bool ascii) : body_(body), ascii_(ascii), tokens_(as_text(body)) {}

    double scalar(PlyType t) {
        if (ascii_) {
            const auto token = tokens_.next();
            if (!token) malformed("PLY body truncated");
            if (ply_is_integer(t)) return static_cast<double>(parse_int(*token));
            return parse_double(*token);
        }
        const std::size_t n = ply_size(t);
        if (body_.size() - pos_ < n) malformed("PLY body truncated");
        const std::uint8_t* p = body_.data() + pos_;
        pos_ += n;
        switch (t) {
        case PlyType::Int8: return static_cast<std::int8_t>(p[0]);
        case PlyType::UInt8: return p[0];
        case PlyType::Int16: return load_le<std::int16_t>(p);
        case PlyType::UInt16: return load_le<std::uint16_t>(p);
        case PlyType::Int32: return load_le<std::int32_t>(p);
        case PlyType::UInt32: return load_le<std::uint32_t>(p);
        case PlyType::Float32: {
            const double v = load_le<float>(p);
            if (!std::isfinite(v)) malformed("non-finite PLY value");
            return v;
        }
        case PlyType::Float64: {
            const double v = load_le<double>(p);
            if (!std::isfinite(v)) malformed("non-finite PLY value");
            return v;
        }
        }
        return 0.0;
    }

    std::size_t remaining_hint() const { return ascii_ ? body_.size() : body_.size() - pos_; }

private:
    ByteSpan body_;
    bool ascii_;
    Tokens tokens_;
    std::size_t pos_ = 0;
};

bool is_index_list(const PlyProperty& p) {
    return p.is_list && (p.name == "vertex_indices" || p.name == "vertex_index");
}

TriangleMesh parse_ply(ByteSpan bytes, MeshFormat format, const MeshParseOptions& options) {
    const PlyHeader header = parse_ply_header(bytes);
    if (header.ascii != (format == MeshFormat::PlyAscii)) malformed("PLY header encoding does not match requested format");
    TriangleMesh mesh;
    mesh.provenance.format = format;
    PlyReader reader(bytes.subspan(header.body_offset), header.ascii);
    std::vector<std::uint32_t> poly;
    std::vector<double> values;
    for (const auto& el : header.elements) {
        const bool is_vertex = el.name == "vertex";
        const bool is_face = el.name == "face";
        int xyz[3] = {-1, -1, -1};
        int index_prop = -1;
        for (std::size_t i = 0; i < el.properties.size(); ++i) {
            const auto& p = el.properties[i];
            if (is_vertex && !p.is_list) {
                if (p.name == "x") xyz[0] = static_cast<int>(i);
                if (p.name == "y") xyz[1] = static_cast<int>(i);
                if (p.name == "z") xyz[2] = static_cast<int>(i);
            }
            if (is_face && is_index_list(p) && index_prop < 0) index_prop = static_cast<int>(i);
        }
        if (is_vertex && (xyz[0] < 0 || xyz[1] < 0 || xyz[2] < 0)) malformed("vertex element lacks x/y/z");
        if (is_face && index_prop < 0) malformed("face element lacks vertex_indices");
        if (is_vertex) mesh.vertices.reserve(std::min<std::uint64_t>(el.count, reader.remaining_hint()));
        if (is_face) mesh.faces.reserve(std::min<std::uint64_t>(el.count, reader.remaining_hint()));

        for (std::uint64_t row = 0; row < el.count; ++row) {
            Eigen::Vector3d v = Eigen::Vector3d::Zero();
            for (std::size_t i = 0; i < el.properties.size(); ++i) {
                const auto& p = el.properties[i];
                if (!p.is_list) {
                    const double value = reader.scalar(p.value_type);
                    if (is_vertex) {
                        for (int k = 0; k < 3; ++k)
                            if (xyz[k] == static_cast<int>(i)) v[k] = value;
                    }
                    continue;
                }
                const double n = reader.scalar(p.count_type);
                if (n < 0) malformed("negative list length");
                const bool wanted = is_face && static_cast<int>(i) == index_prop;
                if (wanted) poly.clear();
                for (std::uint64_t k = 0; k < static_cast<std::uint64_t>(n); ++k) {
                    const double item = reader.scalar(p.value_type);
                    if (!wanted) continue;
                    if (item < 0 || item != std::floor(item) || item > std::numeric_limits<std::uint32_t>::max())
                        malformed("invalid face index");
                    poly.push_back(static_cast<std::uint32_t>(item));
                }
                if (wanted) push_polygon(mesh, poly, options);
            }
            if (is_vertex) mesh.vertices.push_back(v);
        }
    }
    finish(mesh);
    return mesh;
}

std::vector<std::uint8_t> write_ply(const TriangleMesh& mesh, bool ascii) {
    std::vector<std::uint8_t> out;
    append(out, "ply\nformat ");
    append(out, ascii ? "ascii" : "binary_little_endian");
    append(out, " 1.0\ncomment iosvqa\nelement vertex ");
    append_number(out, static_cast<std::uint64_t>(mesh.vertices.size()));
    append(out, "\nproperty double x\nproperty double y\nproperty double z\nelement face ");
    append_number(out, static_cast<std::uint64_t>(mesh.faces.size()));
    append(out, "\nproperty list uchar int vertex_indices\nend_header\n");
    if (ascii) {
        for (const auto& v : mesh.vertices) {
            append_number(out, v.x());
            append(out, " ");
            append_number(out, v.y());
            append(out, " ");
            append_number(out, v.z());
            append(out, "\n");
        }
        for (const auto& f : mesh.faces) {
            append(out, "3");
            for (auto idx : f) {
                append(out, " ");
                append_number(out, static_cast<std::uint64_t>(idx));
            }
            append(out, "\n");
        }
    } else {
        out.reserve(out.size() + 24 * mesh.vertices.size() + 13 * mesh.faces.size());
        for (const auto& v : mesh.vertices)
            for (int i = 0; i < 3; ++i) store_le<double>(out, v[i]);
        for (const auto& f : mesh.faces) {
            out.push_back(3);
            for (auto idx : f) store_le<std::int32_t>(out, static_cast<std::int32_t>(idx));
        }
    }
    return out;
}

bool starts_with_keyword(std::string_view text, std::string_view keyword) {
    text = trim(text.substr(0, std::min<std::size_t>(text.size(), 256)));
    if (text.size() < keyword.size()) return false;
    if (lower(text.substr(0, keyword.size())) != keyword) return false;
    return text.size() == keyword.size() || is_space(text[keyword.size()]);
}

bool looks_like_obj(std::string_view text) {
    static constexpr std::string_view kHeads[] = {"v", "vn", "vt", "vp", "f", "o", "g", "s", "l", "p", "usemtl", "mtllib"};
    std::size_t pos = 0;
    for (int lines = 0; lines < 64 && pos < text.size(); ++lines) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const auto line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        if (line.empty() || line.front() == '#') continue;
        Tokens tok(line);
        const auto head = tok.next();
        return std::find(std::begin(kHeads), std::end(kHeads), *head) != std::end(kHeads);
    }
    return false;
}

} // namespace

std::string_view to_string(MeshFormat format) {
    switch (format) {
    case MeshFormat::StlAscii: return "stl-ascii";
    case MeshFormat::StlBinary: return "stl-binary";
    case MeshFormat::Obj: return "obj";
    case MeshFormat::PlyAscii: return "ply-ascii";
    case MeshFormat::PlyBinaryLe: return "ply-binary-le";
    }
    return "unknown";
}

bool same_geometry(const TriangleMesh& a, const TriangleMesh& b) {
    if (a.vertices.size() != b.vertices.size() || a.faces != b.faces) return false;
    for (std::size_t i = 0; i < a.vertices.size(); ++i)
        for (int k = 0; k < 3; ++k)
            if (std::bit_cast<std::uint64_t>(a.vertices[i][k]) != std::bit_cast<std::uint64_t>(b.vertices[i][k]))
                return false;
    return true;
}

void validate(const TriangleMesh& mesh) {
    if (mesh.faces.empty() && !mesh.vertices.empty()) malformed("mesh has vertices but no faces");
    for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
        const auto& f = mesh.faces[i];
        for (auto idx : f)
            if (idx >= mesh.vertices.size()) malformed("face " + std::to_string(i) + " index out of range");
        if (is_degenerate(f)) throw Error(ErrorCode::DegenerateTopology, "face " + std::to_string(i) + " repeats a vertex");
    }
}

MeshFormat detect_format(ByteSpan bytes, std::string_view path_hint, std::size_t total_size) {
    if (total_size == 0) total_size = bytes.size();
    const std::string_view text = as_text(bytes);

    if (text.substr(0, 3) == "ply" && text.size() > 3 && (text[3] == '\n' || text[3] == '\r')) {
        const std::size_t fpos = text.find("format");
        if (fpos != std::string_view::npos) {
            Tokens tok(text.substr(fpos + 6, 64));
            const auto kind = tok.next();
            if (kind == "ascii") return MeshFormat::PlyAscii;
            if (kind == "binary_little_endian") return MeshFormat::PlyBinaryLe;
            if (kind == "binary_big_endian")
                throw Error(ErrorCode::UnsupportedFormat, "big-endian PLY is not supported");
        }
        throw Error(ErrorCode::UnknownFormat, "PLY magic without a recognizable format line");
    }

    // Binary STL headers may begin with "solid" too, so the size law wins.
    if (bytes.size() >= kStlHeaderSize + 4) {
        const std::uint64_t count = load_le<std::uint32_t>(bytes.data() + kStlHeaderSize);
        if (total_size == kStlHeaderSize + 4 + kStlTriangleSize * count) return MeshFormat::StlBinary;
    }
    if (starts_with_keyword(text, "solid")) return MeshFormat::StlAscii;

    std::string ext = lower(std::filesystem::path(path_hint).extension().string());
    if (ext == ".obj" || looks_like_obj(text)) return MeshFormat::Obj;

    throw Error(ErrorCode::UnknownFormat,
                path_hint.empty() ? std::string("no format rule matched") : "no format rule matched for " + std::string(path_hint));
}

TriangleMesh parse_mesh(ByteSpan bytes, MeshFormat format, const MeshParseOptions& options) {
    switch (format) {
    case MeshFormat::StlBinary: return parse_stl_binary(bytes, options);
    case MeshFormat::StlAscii: return parse_stl_ascii(bytes, options);
    case MeshFormat::Obj: return parse_obj(bytes, options);
    case MeshFormat::PlyAscii:
    case MeshFormat::PlyBinaryLe: return parse_ply(bytes, format, options);
    }
    throw Error(ErrorCode::UnsupportedFormat, "unknown format tag");
}

std::vector<std::uint8_t> write_mesh(const TriangleMesh& mesh, MeshFormat format) {
    validate(mesh);
    switch (format) {
    case MeshFormat::StlBinary: return write_stl_binary(mesh);
    case MeshFormat::StlAscii: return write_stl_ascii(mesh);
    case MeshFormat::Obj: return write_obj(mesh);
    case MeshFormat::PlyAscii: return write_ply(mesh, true);
    case MeshFormat::PlyBinaryLe: return write_ply(mesh, false);
    }
    throw Error(ErrorCode::UnsupportedFormat, "unknown format tag");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorCode::Io, "read failed for " + path.string());
    return bytes;
}

TriangleMesh load_mesh(const std::filesystem::path& path, const MeshParseOptions& options) {
    const auto bytes = read_file_bytes(path);
    const auto format = detect_format(bytes, path.string());
    TriangleMesh mesh = parse_mesh(bytes, format, options);
    mesh.provenance.path = path.string();
    return mesh;
}

} // namespace iosvqa
