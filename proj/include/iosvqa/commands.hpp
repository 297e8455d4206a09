#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "iosvqa/geometry.hpp"

// Subcommand bodies of the iosvqa tool. Each returns the process exit code
// (0 iff no item failed) and writes human-readable output to `out`/`err`.
namespace iosvqa::cli {

namespace fs = std::filesystem;

struct ConvertOptions {
    std::vector<fs::path> inputs; // files or directories
    fs::path out_dir = ".";
    PipelineOptions pipeline;
    std::optional<fs::path> transform_file;
    bool strict_format = false;
    unsigned jobs = 0; // 0 = hardware concurrency
};

struct BuildOptions {
    fs::path manifest;
    fs::path schema;
    fs::path templates;
    fs::path policy;
    fs::path out_dir = ".";
    std::uint64_t seed = 0;
};

struct EvalOptions {
    fs::path predictions;
    fs::path gold;
    fs::path schema;
    std::optional<fs::path> report_out;
    std::optional<fs::path> audit_out;
};

struct StatsOptions {
    std::vector<fs::path> datasets;
    std::optional<fs::path> manifest;
    fs::path schema;
    std::optional<fs::path> json_out;
};

struct SynthOptions {
    std::uint64_t seed = 0;
    std::size_t n_cases = 10;
    bool reference_counts = false; // use the 14,630 / 4,172 / 200 layout
    fs::path schema;
    fs::path out;
};

// Directories expand to the .stl/.obj/.ply files they contain, sorted by name.
std::vector<fs::path> expand_mesh_inputs(const std::vector<fs::path>& inputs);

// JSON document {"rotation": [[...],[...],[...]], "translation": [x, y, z]}.
RigidTransform load_transform(const fs::path& path);

int cmd_convert(const ConvertOptions& options, std::ostream& out, std::ostream& err);
int cmd_build(const BuildOptions& options, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);
int cmd_stats(const StatsOptions& options, std::ostream& out, std::ostream& err);
int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err);

} // namespace iosvqa::cli
