#include "iosvqa/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <set>
#include <thread>

#include <json.hpp>

#include "iosvqa/error.hpp"
#include "iosvqa/eval.hpp"
#include "iosvqa/mesh_io.hpp"
#include "iosvqa/pc_format.hpp"
#include "iosvqa/vqa_builder.hpp"

namespace iosvqa::cli {

namespace {

bool is_mesh_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".stl" || ext == ".obj" || ext == ".ply";
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

struct ConvertResult {
    bool ok = false;
    std::string message;
    double millis = 0.0;
};

} // namespace

std::vector<fs::path> expand_mesh_inputs(const std::vector<fs::path>& inputs) {
    std::vector<fs::path> out;
    for (const auto& input : inputs) {
        std::error_code ec;
        if (fs::is_directory(input, ec)) {
            std::vector<fs::path> found;
            for (const auto& entry : fs::directory_iterator(input, ec))
                if (entry.is_regular_file() && is_mesh_file(entry.path())) found.push_back(entry.path());
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.push_back(input);
        }
    }
    return out;
}

RigidTransform load_transform(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    RigidTransform t;
    try {
        const auto doc = nlohmann::json::parse(bytes.begin(), bytes.end());
        const auto& rot = doc.at("rotation");
        if (rot.size() != 3) throw Error(ErrorCode::InvalidArgument, "rotation must be 3x3");
        for (int r = 0; r < 3; ++r) {
            if (rot.at(r).size() != 3) throw Error(ErrorCode::InvalidArgument, "rotation must be 3x3");
            for (int c = 0; c < 3; ++c) t.rotation(r, c) = rot.at(r).at(c).get<double>();
        }
        if (doc.contains("translation")) {
            const auto& tr = doc.at("translation");
            if (tr.size() != 3) throw Error(ErrorCode::InvalidArgument, "translation must have 3 entries");
            for (int i = 0; i < 3; ++i) t.translation[i] = tr.at(i).get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
    }
    t.validate();
    return t;
}

int cmd_convert(const ConvertOptions& options, std::ostream& out, std::ostream& err) {
    PipelineOptions pipeline = options.pipeline;
    if (pipeline.n_points == 0) {
        err << "error: --n-points must be at least 1\n";
        return 1;
    }
    if (options.transform_file) {
        try {
            pipeline.transform = load_transform(*options.transform_file);
            pipeline.registration = Registration::Transform;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return 1;
        }
    }

    const auto inputs = expand_mesh_inputs(options.inputs);
    if (inputs.empty()) {
        err << "error: no input meshes\n";
        return 1;
    }
    std::vector<fs::path> outputs;
    std::set<fs::path> taken;
    for (const auto& in : inputs) {
        auto target = options.out_dir / in.stem();
        target += ".iospc";
        if (!taken.insert(target).second) {
            err << "error: two inputs map to " << target.string() << "\n";
            return 1;
        }
        outputs.push_back(target);
    }
    std::error_code ec;
    fs::create_directories(options.out_dir, ec);

    MeshParseOptions parse;
    if (options.strict_format) {
        parse.triangulate = false;
        parse.degenerate = DegeneratePolicy::Reject;
    }

    std::vector<ConvertResult> results(inputs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < inputs.size(); i = next++) {
            const auto start = std::chrono::steady_clock::now();
            auto& r = results[i];
            try {
                const TriangleMesh mesh = load_mesh(inputs[i], parse);
                const PointCloud cloud = mesh_to_pointcloud(mesh, pipeline);
                write_file_atomic(outputs[i], encode_pointcloud(cloud));
                r.ok = true;
                r.message = std::to_string(mesh.faces.size()) + " faces -> " + std::to_string(cloud.size()) + " points";
                if (mesh.provenance.dropped_degenerate_faces > 0)
                    r.message += " (dropped " + std::to_string(mesh.provenance.dropped_degenerate_faces) + " degenerate faces)";
            } catch (const std::exception& e) {
                r.message = e.what();
            }
            r.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        }
    };
    unsigned jobs = options.jobs ? options.jobs : std::max(1u, std::thread::hardware_concurrency());
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, inputs.size()));
    std::vector<std::thread> pool;
    for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::size_t failures = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        char timing[32];
        std::snprintf(timing, sizeof(timing), "%.1f ms", results[i].millis);
        if (results[i].ok) {
            out << "ok    " << inputs[i].string() << " -> " << outputs[i].string() << ": " << results[i].message << " ["
                << timing << "]\n";
        } else {
            ++failures;
            err << "FAIL  " << inputs[i].string() << ": " << results[i].message << "\n";
        }
    }
    out << "converted " << inputs.size() - failures << "/" << inputs.size() << " meshes (seed " << pipeline.seed
        << ", " << pipeline.n_points << " points)\n";
    return failures == 0 ? 0 : 1;
}

int cmd_build(const BuildOptions& options, std::ostream& out, std::ostream& err) {
    try {
        const DiseaseSchema schema = load_schema(options.schema);
        const auto cases = load_manifest(options.manifest, schema);
        const auto templates = load_templates(options.templates);
        const auto policy = load_build_policy(options.policy);
        const BuiltDataset dataset = build_dataset(cases, schema, templates, policy, options.seed);

        fs::create_directories(options.out_dir);
        for (Stage stage : kStages) {
            std::vector<VqaSample> part;
            for (const auto& s : dataset.samples)
                if (s.stage == stage) part.push_back(s);
            const auto path = options.out_dir / (std::string(to_string(stage)) + ".jsonl");
            write_file_atomic(path, as_bytes(write_samples(part)));
            out << "wrote " << part.size() << " samples to " << path.string() << "\n";
        }
        const DatasetStats stats = dataset_stats(dataset.samples, cases, schema);
        write_file_atomic(options.out_dir / "stats.json", as_bytes(stats_to_json(stats)));
        out << format_stats_table(stats, schema);
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err) {
    try {
        const DiseaseSchema schema = load_schema(options.schema);
        const Evaluation eval = compute_metrics(load_predictions(options.predictions), load_samples(options.gold), schema);
        if (options.audit_out) write_file_atomic(*options.audit_out, as_bytes(audit_to_jsonl(eval.audit)));
        if (options.report_out) {
            const std::string audit = options.audit_out ? options.audit_out->string() : std::string();
            write_file_atomic(*options.report_out, as_bytes(report_to_json(eval.report, schema, audit)));
        }
        out << format_report_table(eval.report, schema);
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_stats(const StatsOptions& options, std::ostream& out, std::ostream& err) {
    try {
        const DiseaseSchema schema = load_schema(options.schema);
        std::vector<VqaSample> samples;
        for (const auto& path : options.datasets) {
            auto part = load_samples(path);
            std::move(part.begin(), part.end(), std::back_inserter(samples));
        }
        std::vector<CaseRecord> cases;
        if (options.manifest) cases = load_manifest(*options.manifest, schema);
        const DatasetStats stats = dataset_stats(samples, cases, schema);
        if (options.json_out) write_file_atomic(*options.json_out, as_bytes(stats_to_json(stats)));
        out << format_stats_table(stats, schema);
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err) {
    try {
        const DiseaseSchema schema = load_schema(options.schema);
        const SynthConfig config =
            options.reference_counts ? reference_synth_config(schema) : scaled_synth_config(options.n_cases, schema);
        const auto cases = synth_cases(options.seed, config, schema);
        write_file_atomic(options.out, as_bytes(write_manifest(cases)));
        out << "wrote " << cases.size() << " cases to " << options.out.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace iosvqa::cli
