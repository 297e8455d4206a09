#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "iosvqa/commands.hpp"
#include "iosvqa/schema.hpp"

namespace fs = std::filesystem;
using namespace iosvqa;

namespace {

// Reports the seed when the user did not choose one.
void announce_default_seed(const CLI::Option* opt, std::uint64_t seed) {
    if (opt->count() == 0) std::cerr << "note: no --seed given, using seed " << seed << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"iosvqa: intraoral-scan point clouds, staged VQA datasets and answer scoring"};
    app.require_subcommand(1);
    const fs::path data = default_data_dir();

    // convert
    cli::ConvertOptions convert;
    std::string registration = "pca";
    bool no_normalize = false;
    auto* convert_cmd = app.add_subcommand("convert", "Convert meshes (STL/OBJ/PLY) to IOSPC point clouds");
    convert_cmd->add_option("inputs", convert.inputs, "Mesh files or directories")->required();
    convert_cmd->add_option("-o,--out-dir", convert.out_dir, "Output directory");
    convert_cmd->add_option("-n,--n-points", convert.pipeline.n_points, "Points per cloud")->capture_default_str();
    auto* convert_seed = convert_cmd->add_option("--seed", convert.pipeline.seed, "Sampling seed");
    convert_cmd->add_flag("--no-normalize", no_normalize, "Keep coordinates in millimeters");
    convert_cmd->add_option("--registration", registration, "none | pca | path to a transform JSON")->capture_default_str();
    convert_cmd->add_flag("--strict-format", convert.strict_format, "Reject non-triangular and degenerate faces");
    convert_cmd->add_option("-j,--jobs", convert.jobs, "Parallel workers (0 = all cores)");

    // build
    cli::BuildOptions build;
    build.schema = data / "default_schema.json";
    build.templates = data / "question_templates.json";
    build.policy = data / "build_policy.json";
    auto* build_cmd = app.add_subcommand("build", "Build stage1/stage2/test VQA files from a case manifest");
    build_cmd->add_option("manifest", build.manifest, "Line-delimited case manifest")->required();
    build_cmd->add_option("--schema", build.schema, "Disease schema JSON")->capture_default_str();
    build_cmd->add_option("--templates", build.templates, "Question templates JSON")->capture_default_str();
    build_cmd->add_option("--policy", build.policy, "Split / question / rationale policy JSON")->capture_default_str();
    build_cmd->add_option("-o,--out-dir", build.out_dir, "Output directory");
    auto* build_seed = build_cmd->add_option("--seed", build.seed, "Split and sampling seed");

    // eval
    cli::EvalOptions eval;
    eval.schema = data / "default_schema.json";
    auto* eval_cmd = app.add_subcommand("eval", "Score predictions against a gold dataset file");
    eval_cmd->add_option("predictions", eval.predictions, "Predictions JSONL {sample_id, generated_text}")->required();
    eval_cmd->add_option("gold", eval.gold, "Gold dataset JSONL")->required();
    eval_cmd->add_option("--schema", eval.schema, "Disease schema JSON")->capture_default_str();
    eval_cmd->add_option("--report", eval.report_out, "Write the JSON report here");
    eval_cmd->add_option("--audit", eval.audit_out, "Write the per-sample audit log here");

    // stats
    cli::StatsOptions stats;
    stats.schema = data / "default_schema.json";
    auto* stats_cmd = app.add_subcommand("stats", "Summarize dataset files");
    stats_cmd->add_option("datasets", stats.datasets, "Dataset JSONL files")->required();
    stats_cmd->add_option("--manifest", stats.manifest, "Case manifest (enables per-source counts)");
    stats_cmd->add_option("--schema", stats.schema, "Disease schema JSON")->capture_default_str();
    stats_cmd->add_option("--json", stats.json_out, "Write the statistics as JSON");

    // synth
    cli::SynthOptions synth;
    synth.schema = data / "default_schema.json";
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic case manifest");
    auto* synth_seed = synth_cmd->add_option("--seed", synth.seed, "Generator seed");
    synth_cmd->add_option("-n,--n-cases", synth.n_cases, "Number of cases")->capture_default_str();
    synth_cmd->add_flag("--reference-counts", synth.reference_counts, "Use 14,630 / 4,172 / 200 cases per source");
    synth_cmd->add_option("--schema", synth.schema, "Disease schema JSON")->capture_default_str();
    synth_cmd->add_option("-o,--out", synth.out, "Output manifest path")->required();

    CLI11_PARSE(app, argc, argv);

    if (convert_cmd->parsed()) {
        announce_default_seed(convert_seed, convert.pipeline.seed);
        convert.pipeline.normalize = !no_normalize;
        if (registration == "none") convert.pipeline.registration = Registration::None;
        else if (registration == "pca") convert.pipeline.registration = Registration::Pca;
        else convert.transform_file = registration;
        return cli::cmd_convert(convert, std::cout, std::cerr);
    }
    if (build_cmd->parsed()) {
        announce_default_seed(build_seed, build.seed);
        return cli::cmd_build(build, std::cout, std::cerr);
    }
    if (eval_cmd->parsed()) return cli::cmd_eval(eval, std::cout, std::cerr);
    if (stats_cmd->parsed()) return cli::cmd_stats(stats, std::cout, std::cerr);
    if (synth_cmd->parsed()) {
        announce_default_seed(synth_seed, synth.seed);
        return cli::cmd_synth(synth, std::cout, std::cerr);
    }
    return 1;
}
