// gradproj: run the pipeline, export artifacts, compare runs, write demo data.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "gradproj/artifact.hpp"
#include "gradproj/errors.hpp"
#include "gradproj/pipeline.hpp"
#include "gradproj/synth.hpp"

namespace fs = std::filesystem;
using namespace gradproj;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int cmd_run(const fs::path& config_path, const std::optional<fs::path>& out) {
    const PipelineConfig cfg = load_config(config_path);
    const Artifact a = run_pipeline(cfg);
    fs::path dest = out.value_or(cfg.output_dir / (cfg.run_name + ".json"));
    if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
    export_json(a, dest);
    std::cout << dest.string() << "\n";
    std::cerr << "documents " << a.projection.size() << ", cloud entries " << a.cloud().size() << ", backward passes "
              << a.timing.backward_passes << ", forward " << a.timing.forward_ms << " ms (untracked "
              << a.timing.forward_untracked_ms << " ms, overhead " << a.timing.overhead_ratio << "x)\n";
    return 0;
}

int cmd_export(const fs::path& artifact, const std::string& format, const fs::path& out,
               const std::optional<std::string>& scoring) {
    const Artifact a = load_artifact(artifact);
    if (format == "svg") {
        export_svg(a, out, scoring);
    } else {
        export_json(a, out);
    }
    return 0;
}

int cmd_compare(const fs::path& a_path, const fs::path& b_path, const std::optional<std::string>& scoring,
                const std::optional<fs::path>& out) {
    const Comparison c = compare(load_artifact(a_path), load_artifact(b_path), scoring);
    const std::string text = to_json(c).dump(2);
    if (out) {
        std::ofstream f(*out);
        if (!f) throw DataError("cannot write " + out->string());
        f << text << "\n";
    } else {
        std::cout << text << "\n";
    }
    return 0;
}

int cmd_synth(const fs::path& dir, const synth::SynthOptions& opts) {
    fs::create_directories(dir);
    synth::write_files(synth::two_topic_corpus(opts), dir);
    nlohmann::ordered_json cfg{{"corpus_path", "corpus.jsonl"},
                               {"vectors_path", "vectors.txt"},
                               {"cloud", {{"palette_path", "palette.json"}}},
                               {"seed", opts.seed},
                               {"output_dir", "runs"},
                               {"run_name", "synth"}};
    std::ofstream f(dir / "config.json");
    if (!f) throw DataError("cannot write " + (dir / "config.json").string());
    f << cfg.dump(2) << "\n";
    std::cout << (dir / "config.json").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gradient-based attribution for text projections"};
    app.require_subcommand(1);

    fs::path config_path;
    std::optional<fs::path> run_out;
    auto* run = app.add_subcommand("run", "Run the pipeline and write the artifact JSON");
    run->add_option("--config", config_path, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", run_out, "Artifact path (default: <output_dir>/<run_name>.json)");

    fs::path export_in, export_out;
    std::string format = "json";
    std::optional<std::string> export_scoring;
    auto* exp = app.add_subcommand("export", "Re-export a stored artifact as JSON or SVG");
    exp->add_option("artifact", export_in, "Artifact JSON")->required()->check(CLI::ExistingFile);
    exp->add_option("--format", format, "json or svg")->check(CLI::IsMember({"json", "svg"}));
    exp->add_option("--out,-o", export_out, "Output path")->required();
    exp->add_option("--scoring", export_scoring, "Cloud to draw in the SVG (gradient or attention)");

    fs::path cmp_a, cmp_b;
    std::optional<std::string> cmp_scoring;
    std::optional<fs::path> cmp_out;
    auto* cmp = app.add_subcommand("compare", "Compare the clouds of two artifacts");
    cmp->add_option("a", cmp_a, "First artifact")->required()->check(CLI::ExistingFile);
    cmp->add_option("b", cmp_b, "Second artifact")->required()->check(CLI::ExistingFile);
    cmp->add_option("--scoring", cmp_scoring, "Cloud to compare in both runs (default: each run's own)");
    cmp->add_option("--out,-o", cmp_out, "Write the report here instead of stdout");

    fs::path synth_dir;
    synth::SynthOptions synth_opts;
    auto* syn = app.add_subcommand("synth", "Write the two-topic demo corpus, vectors, palette and config");
    syn->add_option("--out,-o", synth_dir, "Output directory")->required();
    syn->add_option("--documents", synth_opts.documents, "Number of documents")->check(CLI::Range(2, 100000));
    syn->add_option("--dimension", synth_opts.dimension, "Vector dimension")->check(CLI::Range(2, 4096));
    syn->add_option("--seed", synth_opts.seed, "Seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) return cmd_run(config_path, run_out);
        if (*exp) return cmd_export(export_in, format, export_out, export_scoring);
        if (*cmp) return cmd_compare(cmp_a, cmp_b, cmp_scoring, cmp_out);
        if (*syn) return cmd_synth(synth_dir, synth_opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }
    return 0;
}
