#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cst/config.hpp"
#include "cst/image_io.hpp"
#include "cst/manifest.hpp"
#include "cst/runner.hpp"
#include "cst/synthetic.hpp"

namespace fs = std::filesystem;

using cst::BoundingBox;
using cst::DatasetManifest;
using cst::PipelineConfig;
using cst::Rng;
using cst::ScanImage;
using cst::SceneParams;
using cst::ShapeKind;
using cst::ShapeSpec;
using cst::SynthSpec;

namespace {

/// Unique scratch directory, removed on destruction.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("cst_test_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

/// True when calling fn throws E whose message contains `fragment`.
template <typename E, typename Fn>
bool throws_containing(Fn&& fn, const std::string& fragment) {
    try {
        fn();
    } catch (const E& e) {
        return std::string(e.what()).find(fragment) != std::string::npos;
    } catch (...) {
        return false;
    }
    return false;
}

SynthSpec small_synth_spec(int scenes) {
    SynthSpec spec;
    spec.scene_count = scenes;
    spec.scene.rows = 96;
    spec.scene.cols = 96;
    spec.scene.background = 200.0;
    spec.scene.margin = 6;
    spec.scene.min_separation = 8;
    spec.shapes = {
        {ShapeKind::square, 20, -110.0},
        {ShapeKind::disk, 18, -95.0},
        {ShapeKind::triangle, 20, -80.0},
    };
    return spec;
}

PipelineConfig clean_scene_config() {
    PipelineConfig config;
    config.use_enhancement = false;  // scenes are already well exposed
    // Odd K: an even orientation count pairs every family member with its
    // exact negation (theta vs theta+pi), so the default M=2 sum cancels.
    // M=3 sums all three squared gradients, which is orientation-isotropic
    // (1.5 * |grad|^2), so every edge direction of a shape responds equally.
    config.k_count = 3;
    config.m_count = 3;
    return config;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config validation names the violated bound") {
    PipelineConfig config;
    config.k_count = 0;
    CHECK(throws_containing<std::invalid_argument>([&] { config.validate(); }, "k_count"));

    config = PipelineConfig{};
    config.m_count = 0;
    CHECK(throws_containing<std::invalid_argument>([&] { config.validate(); }, "m_count"));

    config = PipelineConfig{};
    config.k_count = 4;
    config.m_count = 11;  // family size is 10
    CHECK(throws_containing<std::invalid_argument>([&] { config.validate(); }, "K(K+1)/2"));
    CHECK(throws_containing<std::invalid_argument>([&] { config.validate(); }, "10"));

    config = PipelineConfig{};
    config.max_passes = 0;
    CHECK(throws_containing<std::invalid_argument>([&] { config.validate(); }, "max_passes"));

    config = PipelineConfig{};
    config.diffusion.step = 0.3;
    CHECK(throws_containing<std::invalid_argument>([&] { config.validate(); }, "step"));

    config = PipelineConfig{};
    config.sor.omega = 2.0;
    CHECK(throws_containing<std::invalid_argument>([&] { config.validate(); }, "omega"));

    config = PipelineConfig{};
    config.iou_min = 0.0;
    CHECK(throws_containing<std::invalid_argument>([&] { config.validate(); }, "iou_min"));
}

TEST_CASE("config survives a JSON round trip and honors absent keys") {
    TempDir dir("config");
    PipelineConfig config;
    config.k_count = 6;
    config.m_count = 5;
    config.max_passes = 3;
    config.use_enhancement = false;
    config.grid.grid_rows = 4;
    config.grid.grid_cols = 5;
    config.hist_eq.image_area_denominator = true;
    config.hist_eq.clip_limit = 2.5;
    config.diffusion.iterations = 7;
    config.diffusion.step = 0.15;
    config.diffusion.kappa = 22.0;
    config.contour.min_blob_area = 48;
    config.sor.omega = 1.7;
    config.min_overlap_fraction = 0.25;
    config.iou_min = 0.6;
    config.seed = 99;

    const fs::path path = dir.path / "config.json";
    cst::save_config(config, path);
    const PipelineConfig loaded = cst::load_config(path);
    CHECK(loaded.k_count == config.k_count);
    CHECK(loaded.m_count == config.m_count);
    CHECK(loaded.max_passes == config.max_passes);
    CHECK(loaded.use_enhancement == config.use_enhancement);
    CHECK(loaded.grid.grid_rows == config.grid.grid_rows);
    CHECK(loaded.grid.grid_cols == config.grid.grid_cols);
    CHECK(loaded.hist_eq.image_area_denominator == config.hist_eq.image_area_denominator);
    CHECK(loaded.hist_eq.clip_limit == doctest::Approx(config.hist_eq.clip_limit));
    CHECK(loaded.diffusion.iterations == config.diffusion.iterations);
    CHECK(loaded.diffusion.step == doctest::Approx(config.diffusion.step));
    CHECK(loaded.diffusion.kappa == doctest::Approx(config.diffusion.kappa));
    CHECK(loaded.contour.min_blob_area == config.contour.min_blob_area);
    CHECK(loaded.sor.omega == doctest::Approx(config.sor.omega));
    CHECK(loaded.min_overlap_fraction == doctest::Approx(config.min_overlap_fraction));
    CHECK(loaded.iou_min == doctest::Approx(config.iou_min));
    CHECK(loaded.seed == config.seed);

    // A sparse file only overrides what it mentions.
    const fs::path sparse = dir.path / "sparse.json";
    std::ofstream(sparse) << "{\"k_count\": 5}\n";
    const PipelineConfig partial = cst::load_config(sparse);
    CHECK(partial.k_count == 5);
    CHECK(partial.m_count == PipelineConfig{}.m_count);
    CHECK(partial.use_enhancement == PipelineConfig{}.use_enhancement);

    // Invalid values fail at load time with the bound named.
    const fs::path bad = dir.path / "bad.json";
    std::ofstream(bad) << "{\"k_count\": 2, \"m_count\": 7}\n";
    CHECK(throws_containing<std::invalid_argument>([&] { cst::load_config(bad); }, "m_count"));
    CHECK_THROWS_AS(cst::load_config(dir.path / "missing.json"), std::runtime_error);
    const fs::path garbage = dir.path / "garbage.json";
    std::ofstream(garbage) << "not json";
    CHECK_THROWS_AS(cst::load_config(garbage), std::runtime_error);
}

TEST_CASE("manifests survive a round trip and resolve relative paths") {
    TempDir dir("manifest");
    const fs::path path = dir.path / "manifest.json";
    std::ofstream(path) << R"({
      "classes": ["gun", "knife"],
      "images": [
        {"id": "a", "path": "scans/a.png",
         "truths": [{"class": "knife", "box": {"top": 2, "left": 3, "height": 4, "width": 5}}]},
        {"id": "b", "path": "/abs/b.png", "truths": []}
      ]
    })";
    const DatasetManifest manifest = cst::load_manifest(path);
    REQUIRE(manifest.images.size() == 2);
    CHECK(manifest.registry.names ==
          std::vector<std::string>{"normal", "gun", "knife"});
    CHECK(manifest.images[0].path == dir.path / "scans/a.png");
    CHECK(manifest.images[1].path == fs::path("/abs/b.png"));
    REQUIRE(manifest.images[0].truths.size() == 1);
    CHECK(manifest.images[0].truths[0].class_id == 2);
    CHECK(manifest.images[0].truths[0].box == BoundingBox{2, 3, 4, 5});

    const fs::path copy = dir.path / "copy.json";
    cst::save_manifest(manifest, copy);
    const DatasetManifest again = cst::load_manifest(copy);
    CHECK(again.registry.names == manifest.registry.names);
    REQUIRE(again.images.size() == manifest.images.size());
    CHECK(again.images[0].truths[0].box == manifest.images[0].truths[0].box);
}

TEST_CASE("malformed manifests fail loudly with the offending field") {
    TempDir dir("manifest_bad");
    auto write_and_load = [&](const char* name, const std::string& body) {
        const fs::path p = dir.path / name;
        std::ofstream(p) << body;
        return p;
    };

    const auto unknown = write_and_load("unknown.json", R"({
      "classes": ["gun"],
      "images": [{"id": "a", "path": "a.png",
        "truths": [{"class": "sword", "box": {"top":0,"left":0,"height":2,"width":2}}]}]
    })");
    CHECK(throws_containing<std::runtime_error>([&] { cst::load_manifest(unknown); }, "sword"));

    const auto dup = write_and_load("dup.json", R"({
      "classes": ["gun"],
      "images": [{"id": "a", "path": "a.png"}, {"id": "a", "path": "b.png"}]
    })");
    CHECK(throws_containing<std::runtime_error>([&] { cst::load_manifest(dup); }, "duplicate"));

    const auto flat = write_and_load("flat.json", R"({
      "classes": ["gun"],
      "images": [{"id": "a", "path": "a.png",
        "truths": [{"class": "gun", "box": {"top":0,"left":0,"height":0,"width":2}}]}]
    })");
    CHECK(throws_containing<std::runtime_error>([&] { cst::load_manifest(flat); }, "positive"));

    const auto no_classes = write_and_load("noclasses.json", R"({"images": []})");
    CHECK(throws_containing<std::runtime_error>([&] { cst::load_manifest(no_classes); },
                                                "classes"));
    CHECK_THROWS_AS(cst::load_manifest(dir.path / "absent.json"), std::runtime_error);
}

TEST_CASE("scene generation is seed-deterministic") {
    SceneParams params;
    params.rows = 64;
    params.cols = 64;
    params.noise_sigma = 2.0;
    const std::vector<ShapeSpec> shapes = {{ShapeKind::square, 16, -80.0},
                                           {ShapeKind::disk, 14, -60.0}};
    Rng rng_a(123);
    Rng rng_b(123);
    const auto a = cst::generate_scene(params, shapes, rng_a);
    const auto b = cst::generate_scene(params, shapes, rng_b);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(a->image == b->image);
    REQUIRE(a->shapes.size() == b->shapes.size());
    for (std::size_t i = 0; i < a->shapes.size(); ++i) {
        CHECK(a->shapes[i].box == b->shapes[i].box);
    }
}

TEST_CASE("non-overlapping scenes have pairwise disjoint truth boxes") {
    SceneParams params;
    params.rows = 128;
    params.cols = 128;
    params.min_separation = 4;
    const std::vector<ShapeSpec> shapes = {{ShapeKind::square, 20, -80.0},
                                           {ShapeKind::disk, 18, -70.0},
                                           {ShapeKind::triangle, 20, -60.0}};
    Rng rng(5);
    const auto scene = cst::generate_scene(params, shapes, rng);
    REQUIRE(scene.has_value());
    const auto truths = cst::scene_truths(*scene);
    REQUIRE(truths.size() == 3);
    for (std::size_t i = 0; i < truths.size(); ++i) {
        for (std::size_t j = i + 1; j < truths.size(); ++j) {
            CHECK(cst::intersection_area(truths[i].box, truths[j].box) == 0);
        }
    }
    // Truth classes mirror the shape kinds.
    CHECK(truths[0].class_id == static_cast<int>(ShapeKind::square));
    CHECK(truths[1].class_id == static_cast<int>(ShapeKind::disk));
    CHECK(truths[2].class_id == static_cast<int>(ShapeKind::triangle));
}

TEST_CASE("scenes that cannot fit their shapes are rejected as nullopt") {
    SceneParams params;
    params.rows = 64;
    params.cols = 64;
    Rng rng(6);
    CHECK_FALSE(cst::generate_scene(params, {{ShapeKind::square, 80, -50.0}}, rng).has_value());
    CHECK_THROWS_AS(cst::generate_scene(params, {{ShapeKind::square, 2, -50.0}}, rng),
                    std::invalid_argument);
}

TEST_CASE("image files round trip through PNG and PGM") {
    TempDir dir("imageio");
    Rng rng(7);
    std::vector<std::uint16_t> px8(24 * 18);
    for (auto& v : px8) {
        v = static_cast<std::uint16_t>(rng.uniform_below(256));
    }
    const ScanImage img8 = ScanImage::from_pixels(24, 18, 256, px8);
    std::vector<std::uint16_t> px16(12 * 9);
    for (auto& v : px16) {
        v = static_cast<std::uint16_t>(rng.uniform_below(65536));
    }
    const ScanImage img16 = ScanImage::from_pixels(12, 9, 65536, px16);

    for (const char* name : {"a.png", "a.pgm"}) {
        const fs::path p = dir.path / name;
        cst::save_image(img8, p);
        const ScanImage back = cst::load_image(p);
        CHECK(back == img8);
    }
    for (const char* name : {"b.png", "b.pgm"}) {
        const fs::path p = dir.path / name;
        cst::save_image(img16, p);
        const ScanImage back = cst::load_image(p);
        CHECK(back == img16);
    }
    CHECK_THROWS_AS(cst::load_image(dir.path / "missing.png"), std::runtime_error);
    CHECK_THROWS_AS(cst::save_image(img8, dir.path / "a.tiff"), std::runtime_error);

    // Corrupt PNG payloads are rejected, not crashed on.
    const fs::path corrupt = dir.path / "corrupt.png";
    std::ofstream(corrupt, std::ios::binary) << "\x89PNG\r\n\x1a\nnot really a png";
    CHECK_THROWS_AS(cst::load_image(corrupt), std::runtime_error);
}

TEST_CASE("overlays keep the source geometry") {
    TempDir dir("overlay");
    const ScanImage img(40, 30, 256, 180);
    const std::vector<cst::OverlayBox> boxes = {{BoundingBox{5, 5, 10, 10}, 255, 0, 0},
                                                {BoundingBox{-3, 25, 10, 10}, 0, 255, 255}};
    const fs::path p = dir.path / "overlay.png";
    cst::save_overlay(img, boxes, p);
    const ScanImage back = cst::load_image(p);
    CHECK(back.rows() == 40);
    CHECK(back.cols() == 30);
}

TEST_CASE("synthesized datasets load back with consistent ground truth") {
    TempDir dir("synth");
    const SynthSpec spec = small_synth_spec(4);
    const DatasetManifest manifest = cst::run_synth(spec, 77, dir.path);
    REQUIRE(manifest.images.size() == 4);
    CHECK(manifest.images[0].id == "scene_000");
    CHECK(manifest.images[3].id == "scene_003");
    CHECK(manifest.registry.names ==
          std::vector<std::string>{"normal", "square", "disk", "triangle"});

    const DatasetManifest reloaded = cst::load_manifest(dir.path / "manifest.json");
    REQUIRE(reloaded.images.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(reloaded.images[i].id == manifest.images[i].id);
        CHECK(fs::exists(reloaded.images[i].path));
        const ScanImage img = cst::load_image(reloaded.images[i].path);
        CHECK(img.rows() == spec.scene.rows);
        CHECK(img.cols() == spec.scene.cols);
        REQUIRE(reloaded.images[i].truths.size() == spec.shapes.size());
        for (std::size_t t = 0; t < spec.shapes.size(); ++t) {
            CHECK(reloaded.images[i].truths[t].box == manifest.images[i].truths[t].box);
        }
    }

    // Same seed, second directory: pixel-identical scenes.
    TempDir dir2("synth_again");
    const DatasetManifest manifest2 = cst::run_synth(spec, 77, dir2.path);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(cst::load_image(manifest.images[i].path) ==
              cst::load_image(manifest2.images[i].path));
    }
}

TEST_CASE("extraction runs end to end and its JSON is schedule-independent") {
    TempDir dir("extract");
    const SynthSpec spec = small_synth_spec(3);
    const DatasetManifest manifest = cst::run_synth(spec, 17, dir.path / "data");
    const PipelineConfig config = clean_scene_config();

    cst::ExtractOutputs outputs;
    outputs.crops = true;
    outputs.overlays = true;
    const cst::ExtractRun serial =
        cst::run_extract(config, manifest, dir.path / "out1", outputs, 1);
    CHECK(serial.errors.empty());
    REQUIRE(serial.images.size() == 3);

    int total_proposals = 0;
    for (const auto& img : serial.images) {
        total_proposals += static_cast<int>(img.extraction.proposals.size());
    }
    CHECK(total_proposals >= 9);  // three shapes per scene

    // Crop and overlay artifacts exist with the advertised names.
    const auto& first = serial.images[0];
    REQUIRE(!first.extraction.proposals.empty());
    const auto& p0 = first.extraction.proposals[0];
    CHECK(fs::exists(dir.path / "out1" /
                     (first.id + "_p" + std::to_string(p0.pass_index) + "_l" +
                      std::to_string(p0.contour_label) + ".png")));
    CHECK(fs::exists(dir.path / "out1" / (first.id + "_overlay.png")));

    const cst::ExtractRun pooled =
        cst::run_extract(config, manifest, dir.path / "out2", cst::ExtractOutputs{}, 4);
    CHECK(cst::proposals_to_json(serial) == cst::proposals_to_json(pooled));
}

TEST_CASE("unreadable images become per-file errors without aborting the run") {
    TempDir dir("errors");
    const SynthSpec spec = small_synth_spec(2);
    DatasetManifest manifest = cst::run_synth(spec, 13, dir.path / "data");
    manifest.images.push_back(cst::ManifestImage{"zz_missing", dir.path / "data/nope.png", {}});
    const cst::ExtractRun run = cst::run_extract(clean_scene_config(), manifest,
                                                 dir.path / "out", cst::ExtractOutputs{}, 2);
    REQUIRE(run.errors.size() == 1);
    CHECK(run.errors[0].image_id == "zz_missing");
    CHECK(run.images.size() == 2);
}

TEST_CASE("train, classify, evaluate, and the predictions round trip") {
    TempDir dir("traineval");
    const SynthSpec spec = small_synth_spec(6);
    const DatasetManifest manifest = cst::run_synth(spec, 50, dir.path / "data");
    PipelineConfig config = clean_scene_config();
    config.seed = 3;

    const cst::TrainRun train = cst::run_train(config, manifest, 2);
    CHECK(train.errors.empty());
    CHECK(train.pool_size > 0);
    CHECK(train.trained_on > 0);
    CHECK(train.trained_on <= train.pool_size);
    REQUIRE(!train.loss_curve.empty());

    const cst::ClassifyRun classified = cst::run_classify(config, manifest, train.model, 2);
    CHECK(classified.errors.empty());
    REQUIRE(!classified.predictions.empty());
    for (const auto& rec : classified.predictions) {
        CHECK(rec.class_id >= 0);
        CHECK(rec.class_id < manifest.registry.size());
        CHECK(rec.confidence > 0.0);
        CHECK(rec.confidence <= 1.0 + 1e-12);
    }

    const fs::path pred_path = dir.path / "predictions.json";
    std::ofstream(pred_path) << cst::predictions_to_json(classified, manifest.registry);
    const cst::ClassifyRun reloaded = cst::load_predictions(pred_path, manifest.registry);
    REQUIRE(reloaded.predictions.size() == classified.predictions.size());
    for (std::size_t i = 0; i < reloaded.predictions.size(); ++i) {
        CHECK(reloaded.predictions[i].image_id == classified.predictions[i].image_id);
        CHECK(reloaded.predictions[i].class_id == classified.predictions[i].class_id);
        CHECK(reloaded.predictions[i].box == classified.predictions[i].box);
        CHECK(reloaded.predictions[i].confidence ==
              doctest::Approx(classified.predictions[i].confidence).epsilon(1e-12));
    }

    const cst::EvalReport report = cst::run_evaluate(classified, manifest, 0.5);
    CHECK(report.detection_counts.tp + report.detection_counts.fp +
              report.detection_counts.fn >
          0);

    // Unknown image ids in predictions are rejected.
    cst::ClassifyRun rogue = classified;
    rogue.predictions[0].image_id = "not_in_manifest";
    rogue.predictions[0].class_id = 1;  // keep it a detection, not a no-threat record
    CHECK_THROWS_AS(cst::run_evaluate(rogue, manifest, 0.5), std::runtime_error);

    // Corrupt predictions files are rejected.
    const fs::path bad = dir.path / "bad.json";
    std::ofstream(bad) << "{\"not\": \"an array\"}";
    CHECK_THROWS_AS(cst::load_predictions(bad, manifest.registry), std::runtime_error);
}

TEST_CASE("evaluating an empty dataset yields an empty report") {
    DatasetManifest manifest;
    manifest.registry = cst::ClassRegistry::with_normal({"square"});
    const cst::EvalReport report = cst::run_evaluate(cst::ClassifyRun{}, manifest, 0.5);
    CHECK(report.per_class.empty());
    CHECK_FALSE(report.map.has_value());
    CHECK(report.detection_counts.tp == 0);
}

TEST_CASE("a single ablation cell reports feasibility, quality, and timing") {
    TempDir dir("ablate");
    const SynthSpec spec = small_synth_spec(2);
    const DatasetManifest manifest = cst::run_synth(spec, 21, dir.path / "data");
    PipelineConfig config = clean_scene_config();

    const cst::AblationRun run =
        cst::run_ablation(config, manifest, nullptr, {3}, {2}, 2);
    REQUIRE(run.cells.size() == 1);
    CHECK(run.cells[0].k == 3);
    CHECK(run.cells[0].m == 2);
    CHECK(run.cells[0].feasible);
    CHECK(run.cells[0].mean_image_seconds > 0.0);

    const std::string map_csv = cst::ablation_map_csv(run, {3}, {2});
    CHECK(map_csv.find("M\\K,K=3") != std::string::npos);
    CHECK(map_csv.find("M=2,") != std::string::npos);
    const std::string time_csv = cst::ablation_time_csv(run, {3}, {2});
    CHECK(time_csv.find("M=2,") != std::string::npos);

    // M too large for K is marked infeasible, not an error.
    const cst::AblationRun infeasible =
        cst::run_ablation(config, manifest, nullptr, {2}, {7}, 2);
    REQUIRE(infeasible.cells.size() == 1);
    CHECK_FALSE(infeasible.cells[0].feasible);
    CHECK(cst::ablation_map_csv(infeasible, {2}, {7}).find("M=7,-") != std::string::npos);
}

}  // TEST_SUITE
