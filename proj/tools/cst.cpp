// Command-line front end for the cascaded-structure-tensor pipeline:
// proposal extraction, baseline classification, detection metrics, (K, M)
// ablation sweeps, and synthetic test-scene generation.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cst/config.hpp"
#include "cst/evaluation.hpp"
#include "cst/manifest.hpp"
#include "cst/recognition.hpp"
#include "cst/runner.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<int> k;
    std::optional<int> m;
    std::optional<int> max_passes;
    std::optional<std::uint64_t> seed;
    bool no_enhance = false;
    std::string out_dir = "out";
    int workers = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "JSON config file (defaults apply otherwise)");
    cmd->add_option("--k", opts.k, "Gradient orientation count K");
    cmd->add_option("--m", opts.m, "Coherent tensors summed, M <= K(K+1)/2");
    cmd->add_option("--max-passes", opts.max_passes, "Extraction pass cap");
    cmd->add_option("--seed", opts.seed, "RNG seed for sampling and training");
    cmd->add_flag("--no-enhance", opts.no_enhance,
                  "Skip per-patch contrast enhancement before extraction");
    cmd->add_option("--out", opts.out_dir, "Output directory");
    cmd->add_option("--workers", opts.workers, "Worker threads (0 = hardware default)");
}

cst::PipelineConfig resolve_config(const CommonOptions& opts) {
    cst::PipelineConfig config;
    if (!opts.config_path.empty()) {
        config = cst::load_config(opts.config_path);
    }
    if (opts.k.has_value()) {
        config.k_count = *opts.k;
    }
    if (opts.m.has_value()) {
        config.m_count = *opts.m;
    }
    if (opts.max_passes.has_value()) {
        config.max_passes = *opts.max_passes;
    }
    if (opts.seed.has_value()) {
        config.seed = *opts.seed;
    }
    if (opts.no_enhance) {
        config.use_enhancement = false;
    }
    config.validate();
    return config;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error(path.string() + ": cannot open file for writing");
    }
    out << text;
    if (!out) {
        throw std::runtime_error(path.string() + ": write failed");
    }
}

int report_errors(const std::vector<cst::FileError>& errors) {
    if (errors.empty()) {
        return 0;
    }
    std::cerr << errors.size() << " file(s) failed:\n";
    for (const cst::FileError& e : errors) {
        std::cerr << "  " << e.image_id << ": " << e.message << '\n';
    }
    return 1;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
    std::vector<int> values;
    std::stringstream stream(text);
    std::string token;
    while (std::getline(stream, token, ',')) {
        try {
            values.push_back(std::stoi(token));
        } catch (const std::exception&) {
            throw CLI::ValidationError(flag, "expected comma-separated integers, got \"" +
                                                 text + "\"");
        }
    }
    if (values.empty()) {
        throw CLI::ValidationError(flag, "list must be nonempty");
    }
    return values;
}

cst::ShapeSpec parse_shape(const std::string& token) {
    // kind[:size[:contrast]]
    std::stringstream stream(token);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(stream, part, ':')) {
        parts.push_back(part);
    }
    if (parts.empty()) {
        throw CLI::ValidationError("--shapes", "empty shape token");
    }
    cst::ShapeSpec spec;
    if (parts[0] == "square") {
        spec.kind = cst::ShapeKind::square;
    } else if (parts[0] == "disk") {
        spec.kind = cst::ShapeKind::disk;
    } else if (parts[0] == "triangle") {
        spec.kind = cst::ShapeKind::triangle;
    } else {
        throw CLI::ValidationError("--shapes", "unknown shape \"" + parts[0] +
                                                   "\" (square|disk|triangle)");
    }
    try {
        if (parts.size() > 1) {
            spec.size = std::stoi(parts[1]);
        }
        if (parts.size() > 2) {
            spec.contrast = std::stod(parts[2]);
        }
    } catch (const std::exception&) {
        throw CLI::ValidationError("--shapes", "bad size/contrast in \"" + token + "\"");
    }
    return spec;
}

int cmd_extract(const CommonOptions& opts, const std::string& manifest_path, bool overlays,
                bool crops) {
    const cst::PipelineConfig config = resolve_config(opts);
    const cst::DatasetManifest manifest = cst::load_manifest(manifest_path);
    std::filesystem::create_directories(opts.out_dir);

    cst::ExtractOutputs outputs;
    outputs.overlays = overlays;
    outputs.crops = crops;
    const cst::ExtractRun run =
        cst::run_extract(config, manifest, opts.out_dir, outputs, opts.workers);

    write_text(std::filesystem::path(opts.out_dir) / "proposals.json",
               cst::proposals_to_json(run));

    std::size_t total = 0;
    for (const cst::PerImageExtraction& img : run.images) {
        total += img.extraction.proposals.size();
    }
    std::cout << "extracted " << total << " proposals from " << run.images.size()
              << " image(s)\n";
    return report_errors(run.errors);
}

int cmd_classify(const CommonOptions& opts, const std::string& manifest_path,
                 const std::string& model_path, const std::string& train_manifest_path,
                 const std::string& model_out_path) {
    const cst::PipelineConfig config = resolve_config(opts);
    std::filesystem::create_directories(opts.out_dir);

    cst::ClassifierModel model;
    std::vector<cst::FileError> train_errors;
    if (!train_manifest_path.empty()) {
        const cst::DatasetManifest train_manifest = cst::load_manifest(train_manifest_path);
        cst::TrainRun trained = cst::run_train(config, train_manifest, opts.workers);
        train_errors = trained.errors;
        model = std::move(trained.model);
        const std::string model_file =
            model_out_path.empty()
                ? (std::filesystem::path(opts.out_dir) / "model.bin").string()
                : model_out_path;
        cst::save_model(model, model_file);
        std::cout << "trained on " << trained.trained_on << " of " << trained.pool_size
                  << " labeled proposals; model written to " << model_file << '\n';
    } else if (!model_path.empty()) {
        model = cst::load_model(model_path);
    } else {
        std::cerr << "classify: provide --model or --train-manifest\n";
        return 1;
    }

    if (manifest_path.empty()) {
        return report_errors(train_errors);
    }
    const cst::DatasetManifest manifest = cst::load_manifest(manifest_path);
    const cst::ClassifyRun run = cst::run_classify(config, manifest, model, opts.workers);
    write_text(std::filesystem::path(opts.out_dir) / "predictions.json",
               cst::predictions_to_json(run, model.classes));
    std::cout << "classified " << run.predictions.size() << " proposal(s)\n";

    std::vector<cst::FileError> all_errors = train_errors;
    all_errors.insert(all_errors.end(), run.errors.begin(), run.errors.end());
    return report_errors(all_errors);
}

int cmd_evaluate(const CommonOptions& opts, const std::string& manifest_path,
                 const std::string& predictions_path) {
    const cst::PipelineConfig config = resolve_config(opts);
    const cst::DatasetManifest manifest = cst::load_manifest(manifest_path);
    const cst::ClassifyRun run = cst::load_predictions(predictions_path, manifest.registry);
    const cst::EvalReport report = cst::run_evaluate(run, manifest, config.iou_min);

    std::filesystem::create_directories(opts.out_dir);
    std::vector<std::string> class_names;
    for (int i = 0; i < manifest.registry.size(); ++i) {
        class_names.push_back(manifest.registry.name_of(i));
    }
    write_text(std::filesystem::path(opts.out_dir) / "report.json",
               cst::report_to_json(report, class_names));
    write_text(std::filesystem::path(opts.out_dir) / "pr_points.csv", cst::pr_points_csv(report));
    write_text(std::filesystem::path(opts.out_dir) / "roc_points.csv",
               cst::roc_points_csv(report));

    std::cout << "mAP: " << (report.map.has_value() ? std::to_string(*report.map) : "undefined")
              << '\n';
    return 0;
}

int cmd_ablate(const CommonOptions& opts, const std::string& manifest_path,
               const std::string& train_manifest_path, const std::string& k_list,
               const std::string& m_list) {
    const cst::PipelineConfig config = resolve_config(opts);
    const cst::DatasetManifest manifest = cst::load_manifest(manifest_path);
    std::optional<cst::DatasetManifest> train_manifest;
    if (!train_manifest_path.empty()) {
        train_manifest = cst::load_manifest(train_manifest_path);
    }
    const std::vector<int> k_values = parse_int_list(k_list, "--k-values");
    const std::vector<int> m_values = parse_int_list(m_list, "--m-values");

    const cst::AblationRun run =
        cst::run_ablation(config, manifest, train_manifest ? &*train_manifest : nullptr,
                          k_values, m_values, opts.workers);

    std::filesystem::create_directories(opts.out_dir);
    const std::string map_csv = cst::ablation_map_csv(run, k_values, m_values);
    const std::string time_csv = cst::ablation_time_csv(run, k_values, m_values);
    write_text(std::filesystem::path(opts.out_dir) / "ablation_map.csv", map_csv);
    write_text(std::filesystem::path(opts.out_dir) / "ablation_time.csv", time_csv);
    std::cout << "mAP by (M, K):\n" << map_csv << "\nmean seconds/image by (M, K):\n" << time_csv;
    return 0;
}

int cmd_synth(const CommonOptions& opts, int scenes, const std::string& shapes_list, int rows,
              int cols, double noise_sigma, int edge_softness, bool allow_overlap) {
    cst::SynthSpec spec;
    spec.scene_count = scenes;
    spec.scene.rows = rows;
    spec.scene.cols = cols;
    spec.scene.noise_sigma = noise_sigma;
    spec.scene.edge_softness = edge_softness;
    spec.scene.allow_overlap = allow_overlap;

    std::stringstream stream(shapes_list);
    std::string token;
    while (std::getline(stream, token, ',')) {
        spec.shapes.push_back(parse_shape(token));
    }
    if (spec.shapes.empty()) {
        std::cerr << "synth: --shapes must list at least one shape\n";
        return 1;
    }

    const std::uint64_t seed = opts.seed.value_or(0);
    const cst::DatasetManifest manifest = cst::run_synth(spec, seed, opts.out_dir);
    std::cout << "wrote " << manifest.images.size() << " scene(s) and manifest.json to "
              << opts.out_dir << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cascaded structure-tensor baggage-item detection pipeline"};
    app.require_subcommand(1);

    CommonOptions opts;

    // extract
    auto* extract = app.add_subcommand("extract", "Extract item proposals from scans");
    std::string extract_manifest;
    bool overlays = false;
    bool crops = false;
    extract->add_option("--manifest", extract_manifest, "Dataset manifest JSON")->required();
    extract->add_flag("--overlays", overlays, "Write box overlays (red proposals, cyan truths)");
    extract->add_flag("--crops", crops, "Write proposal crops as PNG files");
    add_common(extract, opts);

    // classify
    auto* classify = app.add_subcommand("classify", "Classify extracted proposals");
    std::string classify_manifest;
    std::string model_path;
    std::string train_manifest;
    std::string model_out;
    classify->add_option("--manifest", classify_manifest, "Dataset manifest to classify");
    classify->add_option("--model", model_path, "Trained model file");
    classify->add_option("--train-manifest", train_manifest,
                         "Train a new model on this manifest first");
    classify->add_option("--model-out", model_out, "Where to write the trained model");
    add_common(classify, opts);

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Score predictions against ground truth");
    std::string eval_manifest;
    std::string predictions_path;
    evaluate->add_option("--manifest", eval_manifest, "Dataset manifest JSON")->required();
    evaluate->add_option("--predictions", predictions_path, "predictions.json from classify")
        ->required();
    add_common(evaluate, opts);

    // ablate
    auto* ablate = app.add_subcommand("ablate", "Sweep (K, M) and tabulate mAP and timing");
    std::string ablate_manifest;
    std::string ablate_train_manifest;
    std::string k_list = "2,3,4";
    std::string m_list = "2";
    ablate->add_option("--manifest", ablate_manifest, "Evaluation manifest JSON")->required();
    ablate->add_option("--train-manifest", ablate_train_manifest,
                       "Training manifest (defaults to the evaluation manifest)");
    ablate->add_option("--k-values", k_list, "Comma-separated K values");
    ablate->add_option("--m-values", m_list, "Comma-separated M values");
    add_common(ablate, opts);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate synthetic scenes with ground truth");
    int scenes = 10;
    std::string shapes_list = "square:24:-60,disk:20:-50,triangle:22:-45";
    int rows = 128;
    int cols = 128;
    double noise_sigma = 0.0;
    int edge_softness = 2;
    bool allow_overlap = false;
    synth->add_option("--scenes", scenes, "Number of scenes");
    synth->add_option("--shapes", shapes_list,
                      "Comma-separated kind[:size[:contrast]] shape specs");
    synth->add_option("--rows", rows, "Scene height");
    synth->add_option("--cols", cols, "Scene width");
    synth->add_option("--noise-sigma", noise_sigma, "Additive Gaussian noise sigma");
    synth->add_option("--edge-softness", edge_softness, "Box-blur radius for shape silhouettes");
    synth->add_flag("--allow-overlap", allow_overlap, "Permit overlapping shapes");
    add_common(synth, opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (extract->parsed()) {
            return cmd_extract(opts, extract_manifest, overlays, crops);
        }
        if (classify->parsed()) {
            return cmd_classify(opts, classify_manifest, model_path, train_manifest, model_out);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(opts, eval_manifest, predictions_path);
        }
        if (ablate->parsed()) {
            return cmd_ablate(opts, ablate_manifest, ablate_train_manifest, k_list, m_list);
        }
        if (synth->parsed()) {
            return cmd_synth(opts, scenes, shapes_list, rows, cols, noise_sigma, edge_softness,
                             allow_overlap);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
