#pragma once

// Independent reference implementations and fixtures shared by the unit tests
// and the acceptance binary. Nothing here calls into the code under test
// except for plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iosvqa/eval.hpp"
#include "iosvqa/geometry.hpp"
#include "iosvqa/mesh_io.hpp"
#include "iosvqa/vqa_builder.hpp"

namespace oracle {

using Vec3 = Eigen::Vector3d;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline std::size_t below(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

// Random triangle soup with shared vertices. Coordinates are float-exact so
// the mesh also survives STL's f32 storage; vertices are distinct and appear
// in first-use order, which is what an STL reader reconstructs.
inline iosvqa::TriangleMesh random_mesh(std::uint64_t seed, std::size_t n_vertices, std::size_t n_faces) {
    std::mt19937_64 rng(seed);
    iosvqa::TriangleMesh mesh;
    std::set<std::array<float, 3>> used;
    std::vector<Vec3> pool;
    while (pool.size() < n_vertices) {
        std::array<float, 3> p{static_cast<float>(uniform(rng, -50, 50)), static_cast<float>(uniform(rng, -50, 50)),
                               static_cast<float>(uniform(rng, -20, 20))};
        if (!used.insert(p).second) continue;
        pool.emplace_back(p[0], p[1], p[2]);
    }
    std::vector<iosvqa::Face> raw;
    while (raw.size() < n_faces) {
        iosvqa::Face f{static_cast<std::uint32_t>(below(rng, n_vertices)), static_cast<std::uint32_t>(below(rng, n_vertices)),
                       static_cast<std::uint32_t>(below(rng, n_vertices))};
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) continue;
        raw.push_back(f);
    }
    // Renumber to first-occurrence order and drop unused vertices.
    std::vector<std::int64_t> remap(n_vertices, -1);
    for (const auto& f : raw) {
        iosvqa::Face g{};
        for (int k = 0; k < 3; ++k) {
            if (remap[f[k]] < 0) {
                remap[f[k]] = static_cast<std::int64_t>(mesh.vertices.size());
                mesh.vertices.push_back(pool[f[k]]);
            }
            g[k] = static_cast<std::uint32_t>(remap[f[k]]);
        }
        mesh.faces.push_back(g);
    }
    return mesh;
}

// Six-sided box of 12 triangles.
inline iosvqa::TriangleMesh cube_mesh(double sx = 2.0, double sy = 1.5, double sz = 1.0) {
    iosvqa::TriangleMesh m;
    for (int i = 0; i < 8; ++i) m.vertices.emplace_back((i & 1) ? sx : 0.0, (i & 2) ? sy : 0.0, (i & 4) ? sz : 0.0);
    const std::uint32_t quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
    for (const auto& q : quads) {
        m.faces.push_back({q[0], q[1], q[2]});
        m.faces.push_back({q[0], q[2], q[3]});
    }
    return m;
}

// Closed ellipsoid-like surface with roughly 2*rings*segments faces.
inline iosvqa::TriangleMesh ellipsoid_mesh(std::size_t rings, std::size_t segments, double a = 30, double b = 20,
                                           double c = 10) {
    iosvqa::TriangleMesh m;
    const double pi = std::acos(-1.0);
    m.vertices.emplace_back(0, 0, c);
    for (std::size_t i = 1; i < rings; ++i) {
        const double th = pi * static_cast<double>(i) / static_cast<double>(rings);
        for (std::size_t j = 0; j < segments; ++j) {
            const double ph = 2 * pi * static_cast<double>(j) / static_cast<double>(segments);
            m.vertices.emplace_back(a * std::sin(th) * std::cos(ph), b * std::sin(th) * std::sin(ph), c * std::cos(th));
        }
    }
    m.vertices.emplace_back(0, 0, -c);
    const auto ring = [&](std::size_t i, std::size_t j) { return static_cast<std::uint32_t>(1 + (i - 1) * segments + j % segments); };
    const auto bottom = static_cast<std::uint32_t>(m.vertices.size() - 1);
    for (std::size_t j = 0; j < segments; ++j) m.faces.push_back({0, ring(1, j), ring(1, j + 1)});
    for (std::size_t i = 1; i + 1 < rings; ++i)
        for (std::size_t j = 0; j < segments; ++j) {
            m.faces.push_back({ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)});
            m.faces.push_back({ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)});
        }
    for (std::size_t j = 0; j < segments; ++j) m.faces.push_back({ring(rings - 1, j), bottom, ring(rings - 1, j + 1)});
    return m;
}

// Uniform random rotation from a normalized quaternion.
inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
    q.normalize();
    return q.toRotationMatrix();
}

inline iosvqa::RigidTransform random_rigid(std::mt19937_64& rng) {
    iosvqa::RigidTransform t;
    t.rotation = random_rotation(rng);
    t.translation = Vec3(uniform(rng, -100, 100), uniform(rng, -100, 100), uniform(rng, -100, 100));
    return t;
}

// Point cloud with three clearly separated principal extents.
inline iosvqa::OrientedPointSet anisotropic_points(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 rng(seed);
    iosvqa::OrientedPointSet s;
    for (std::size_t i = 0; i < n; ++i) {
        s.positions.emplace_back(uniform(rng, -30, 30), uniform(rng, -12, 12), uniform(rng, -4, 4));
        s.normals.emplace_back(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    }
    // Skew each axis so the sign-fixing projection is never tied.
    s.positions[0] = Vec3(40, 15, 5);
    return s;
}

// Naive centroid / normal per face.
inline void face_oracle(const iosvqa::TriangleMesh& m, std::size_t f, Vec3& centroid, Vec3& normal) {
    const Vec3& a = m.vertices[m.faces[f][0]];
    const Vec3& b = m.vertices[m.faces[f][1]];
    const Vec3& c = m.vertices[m.faces[f][2]];
    for (int k = 0; k < 3; ++k) centroid[k] = (a[k] + b[k] + c[k]) / 3.0;
    const Vec3 u = b - a, v = c - a;
    normal = Vec3(u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]);
}

// Confusion-matrix metrics for one disease computed by explicit counting.
// `pred` holds a class index or -1 for an unparsable answer.
struct NaiveDisease {
    double accuracy = 0, precision = 0, recall = 0, f1 = 0, pr = 0;
};

inline NaiveDisease naive_metrics(const std::vector<int>& gold, const std::vector<int>& pred, int n_classes) {
    NaiveDisease r;
    const std::size_t n = gold.size();
    std::size_t correct = 0, parsable = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (pred[i] >= 0) ++parsable;
        if (pred[i] == gold[i]) ++correct;
    }
    r.accuracy = n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
    r.pr = n ? static_cast<double>(parsable) / static_cast<double>(n) : 0.0;
    int present = 0;
    for (int c = 0; c < n_classes; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0;
        bool occurs = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (gold[i] == c || pred[i] == c) occurs = true;
            if (gold[i] == c && pred[i] == c) ++tp;
            if (gold[i] != c && pred[i] == c) ++fp;
            if (gold[i] == c && pred[i] != c) ++fn;
        }
        if (!occurs) continue;
        ++present;
        const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double q = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        r.precision += p;
        r.recall += q;
        r.f1 += p + q > 0 ? 2 * p * q / (p + q) : 0.0;
    }
    if (present) {
        r.precision /= present;
        r.recall /= present;
        r.f1 /= present;
    }
    return r;
}

// Schema with diseases whose labels are single letters "a", "b", ...
inline iosvqa::DiseaseSchema letter_schema(const std::vector<int>& class_counts) {
    std::vector<iosvqa::Disease> ds;
    for (std::size_t i = 0; i < class_counts.size(); ++i) {
        iosvqa::Disease d;
        d.id = static_cast<int>(i + 1);
        d.name = "disease_" + std::to_string(i + 1);
        for (int c = 0; c < class_counts[i]; ++c) d.labels.push_back({std::string(1, static_cast<char>('a' + c)), {}});
        ds.push_back(d);
    }
    return iosvqa::DiseaseSchema(std::move(ds));
}

// One random metrics instance plus its library-format inputs.
struct MetricsInstance {
    iosvqa::DiseaseSchema schema;
    std::vector<iosvqa::VqaSample> gold;
    std::vector<iosvqa::Prediction> predictions;
    std::map<int, std::pair<std::vector<int>, std::vector<int>>> by_disease; // gold idx, pred idx (-1 unparsable)
    std::vector<int> class_counts;
};

inline MetricsInstance random_metrics_instance(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    MetricsInstance inst;
    const std::size_t n_diseases = 1 + below(rng, 4);
    for (std::size_t d = 0; d < n_diseases; ++d) inst.class_counts.push_back(2 + static_cast<int>(below(rng, 5)));
    inst.schema = letter_schema(inst.class_counts);
    const std::size_t n = 1 + below(rng, 200);
    const double p_correct = uniform(rng, 0, 1), p_unparsable = uniform(rng, 0, 0.4);
    for (std::size_t i = 0; i < n; ++i) {
        const int d = 1 + static_cast<int>(below(rng, n_diseases));
        const int k = inst.class_counts[static_cast<std::size_t>(d - 1)];
        const int g = static_cast<int>(below(rng, static_cast<std::size_t>(k)));
        int p;
        const double u = uniform(rng, 0, 1);
        if (u < p_unparsable) p = -1;
        else if (u < p_unparsable + (1 - p_unparsable) * p_correct) p = g;
        else p = static_cast<int>(below(rng, static_cast<std::size_t>(k)));

        iosvqa::VqaSample s;
        s.sample_id = "s" + std::to_string(i);
        s.case_id = "c" + std::to_string(i);
        s.disease_id = d;
        s.question = "q";
        s.answer_label = std::string(1, static_cast<char>('a' + g));
        inst.gold.push_back(s);
        inst.by_disease[d].first.push_back(g);
        inst.by_disease[d].second.push_back(p);

        // Unparsable answers are missing, empty, unmatched or ambiguous.
        const auto kind = below(rng, 4);
        if (p < 0) {
            if (kind == 0) continue; // no prediction at all
            const char* junk[] = {"", "I cannot tell.", "a or b"};
            inst.predictions.push_back({s.sample_id, kind == 3 ? "   " : junk[kind - 1]});
        } else {
            const std::string l(1, static_cast<char>('a' + p));
            const std::string forms[] = {l, "Answer: " + l, "the label is " + l + ".", std::string(1, static_cast<char>('A' + p))};
            inst.predictions.push_back({s.sample_id, forms[kind]});
        }
    }
    std::shuffle(inst.predictions.begin(), inst.predictions.end(), rng);
    return inst;
}

// Brute-force rule evaluation: every matching rule, then max priority.
inline std::map<int, std::string> naive_mapping(const iosvqa::RawRecord& record, const std::vector<iosvqa::MappingRule>& rules,
                                                bool& conflict) {
    conflict = false;
    std::map<int, std::vector<const iosvqa::MappingRule*>> fired;
    for (const auto& r : rules) {
        const auto it = record.find(r.source_field);
        if (it != record.end() && r.predicate.matches(it->second)) fired[r.disease_id].push_back(&r);
    }
    std::map<int, std::string> out;
    for (const auto& [d, list] : fired) {
        int best = list.front()->priority;
        for (const auto* r : list) best = std::max(best, r->priority);
        std::set<std::string> labels;
        for (const auto* r : list)
            if (r->priority == best) labels.insert(r->label);
        if (labels.size() > 1) conflict = true;
        out[d] = *labels.begin();
    }
    return out;
}

struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() / ("iosvqa-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline std::span<const std::uint8_t> bytes_of(const std::string& s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

} // namespace oracle
