#include "cst/runner.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "cst/image_io.hpp"
#include "cst/imaging.hpp"

namespace cst {

namespace {

ExtractParams to_extract_params(const PipelineConfig& c) {
    ExtractParams p;
    p.k_count = c.k_count;
    p.m_count = c.m_count;
    p.max_passes = c.max_passes;
    p.diffusion = c.diffusion;
    p.contour = c.contour;
    p.solver = c.sor;
    return p;
}

ExtractionResult extract_one(const PipelineConfig& c, const ScanImage& img) {
    if (!c.use_enhancement) {
        return extract_proposals(img, to_extract_params(c));
    }
    return extract_proposals(enhance_contrast(img, c.grid, c.hist_eq), to_extract_params(c));
}

/// Run fn(0..n-1) on a bounded pool. fn must not throw.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    if (n == 0) {
        return;
    }
    unsigned w = workers > 0 ? static_cast<unsigned>(workers)
                             : std::max(1u, std::thread::hardware_concurrency());
    w = static_cast<unsigned>(std::min<std::size_t>(w, n));
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (unsigned t = 0; t < w; ++t) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) {
                    break;
                }
                fn(i);
            }
        });
    }
    for (std::thread& t : pool) {
        t.join();
    }
}

nlohmann::json box_json(const BoundingBox& b) {
    return {{"top", b.top}, {"left", b.left}, {"height", b.height}, {"width", b.width}};
}

}  // namespace

ExtractRun run_extract(const PipelineConfig& config, const DatasetManifest& manifest,
                       const std::filesystem::path& out_dir, const ExtractOutputs& outputs,
                       int workers) {
    config.validate();
    if (outputs.overlays || outputs.crops) {
        std::filesystem::create_directories(out_dir);
    }

    const std::size_t n = manifest.images.size();
    std::vector<std::optional<PerImageExtraction>> slots(n);
    std::vector<std::optional<FileError>> error_slots(n);

    parallel_for(n, workers, [&](std::size_t i) {
        const ManifestImage& entry = manifest.images[i];
        try {
            const ScanImage img = load_image(entry.path);
            PerImageExtraction result;
            result.id = entry.id;
            result.extraction = extract_one(config, img);

            if (outputs.crops) {
                for (const Proposal& p : result.extraction.proposals) {
                    const std::string name = entry.id + "_p" + std::to_string(p.pass_index) +
                                             "_l" + std::to_string(p.contour_label) + ".png";
                    save_image(p.crop, out_dir / name);
                }
            }
            if (outputs.overlays) {
                std::vector<OverlayBox> boxes;
                for (const GroundTruth& t : entry.truths) {
                    boxes.push_back(OverlayBox{t.box, 0, 255, 255});  // truths cyan
                }
                for (const Proposal& p : result.extraction.proposals) {
                    boxes.push_back(OverlayBox{p.box, 255, 0, 0});  // proposals red
                }
                save_overlay(img, boxes, out_dir / (entry.id + "_overlay.png"));
            }
            slots[i] = std::move(result);
        } catch (const std::exception& e) {
            error_slots[i] = FileError{entry.id, e.what()};
        }
    });

    ExtractRun run;
    for (std::size_t i = 0; i < n; ++i) {
        if (slots[i].has_value()) {
            run.images.push_back(std::move(*slots[i]));
        }
        if (error_slots[i].has_value()) {
            run.errors.push_back(std::move(*error_slots[i]));
        }
    }
    std::sort(run.images.begin(), run.images.end(),
              [](const PerImageExtraction& a, const PerImageExtraction& b) { return a.id < b.id; });
    std::sort(run.errors.begin(), run.errors.end(),
              [](const FileError& a, const FileError& b) { return a.image_id < b.image_id; });
    return run;
}

std::string proposals_to_json(const ExtractRun& run) {
    nlohmann::json records = nlohmann::json::array();
    for (const PerImageExtraction& img : run.images) {
        for (const Proposal& p : img.extraction.proposals) {
            records.push_back({{"image_id", img.id},
                               {"pass", p.pass_index},
                               {"label", p.contour_label},
                               {"box", box_json(p.box)}});
        }
    }
    return records.dump(2) + "\n";
}

TrainRun run_train(const PipelineConfig& config, const DatasetManifest& manifest, int workers) {
    config.validate();

    const std::size_t n = manifest.images.size();
    std::vector<std::vector<LabeledProposal>> labeled(n);
    std::vector<std::optional<FileError>> error_slots(n);

    parallel_for(n, workers, [&](std::size_t i) {
        const ManifestImage& entry = manifest.images[i];
        try {
            const ScanImage img = load_image(entry.path);
            const ExtractionResult extraction = extract_one(config, img);
            for (const Proposal& p : extraction.proposals) {
                labeled[i].push_back(assign_label(p, entry.truths, config.min_overlap_fraction));
            }
        } catch (const std::exception& e) {
            error_slots[i] = FileError{entry.id, e.what()};
        }
    });

    // Pool in image order (manifest order) so balancing is reproducible.
    std::vector<LabeledProposal> pool;
    TrainRun run;
    for (std::size_t i = 0; i < n; ++i) {
        for (LabeledProposal& lp : labeled[i]) {
            pool.push_back(std::move(lp));
        }
        if (error_slots[i].has_value()) {
            run.errors.push_back(std::move(*error_slots[i]));
        }
    }
    run.pool_size = static_cast<int>(pool.size());

    const BalanceResult balanced = balance_classes(pool, config.seed);
    run.trained_on = static_cast<int>(balanced.kept.size());

    TrainConfig tc;
    tc.seed = config.seed;
    TrainResult trained = train_baseline(balanced.kept, manifest.registry, tc);
    run.model = std::move(trained.model);
    run.loss_curve = std::move(trained.loss_curve);
    return run;
}

ClassifyRun run_classify(const PipelineConfig& config, const DatasetManifest& manifest,
                         const ClassifierModel& model, int workers) {
    config.validate();

    const std::size_t n = manifest.images.size();
    std::vector<std::vector<PredictionRecord>> per_image(n);
    std::vector<std::optional<FileError>> error_slots(n);

    parallel_for(n, workers, [&](std::size_t i) {
        const ManifestImage& entry = manifest.images[i];
        try {
            const ScanImage img = load_image(entry.path);
            const ExtractionResult extraction = extract_one(config, img);
            for (const Proposal& p : extraction.proposals) {
                const Detection d = classify(model, p);
                PredictionRecord rec;
                rec.image_id = entry.id;
                rec.pass = p.pass_index;
                rec.label = p.contour_label;
                rec.box = p.box;
                rec.class_id = d.class_id;
                rec.confidence = d.score;
                per_image[i].push_back(std::move(rec));
            }
        } catch (const std::exception& e) {
            error_slots[i] = FileError{entry.id, e.what()};
        }
    });

    ClassifyRun run;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return manifest.images[a].id < manifest.images[b].id;
    });
    for (std::size_t i : order) {
        for (PredictionRecord& rec : per_image[i]) {
            run.predictions.push_back(std::move(rec));
        }
        if (error_slots[i].has_value()) {
            run.errors.push_back(std::move(*error_slots[i]));
        }
    }
    return run;
}

std::string predictions_to_json(const ClassifyRun& run, const ClassRegistry& registry) {
    nlohmann::json records = nlohmann::json::array();
    for (const PredictionRecord& rec : run.predictions) {
        records.push_back({{"image_id", rec.image_id},
                           {"pass", rec.pass},
                           {"label", rec.label},
                           {"box", box_json(rec.box)},
                           {"class", registry.name_of(rec.class_id)},
                           {"confidence", rec.confidence}});
    }
    return records.dump(2) + "\n";
}

ClassifyRun load_predictions(const std::filesystem::path& path, const ClassRegistry& registry) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("predictions " + path.string() + ": cannot open file");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("predictions " + path.string() + ": invalid JSON: " + e.what());
    }
    if (!j.is_array()) {
        throw std::runtime_error("predictions " + path.string() + ": expected a JSON array");
    }
    ClassifyRun run;
    for (const auto& rec : j) {
        PredictionRecord p;
        p.image_id = rec.at("image_id").get<std::string>();
        p.pass = rec.at("pass").get<int>();
        p.label = rec.at("label").get<int>();
        const auto& b = rec.at("box");
        p.box = BoundingBox{b.at("top").get<int>(), b.at("left").get<int>(),
                            b.at("height").get<int>(), b.at("width").get<int>()};
        const std::string cls = rec.at("class").get<std::string>();
        p.class_id = registry.id_of(cls);
        if (p.class_id < 0) {
            throw std::runtime_error("predictions " + path.string() + ": unknown class \"" +
                                     cls + "\"");
        }
        p.confidence = rec.at("confidence").get<double>();
        run.predictions.push_back(std::move(p));
    }
    return run;
}

EvalReport run_evaluate(const ClassifyRun& run, const DatasetManifest& manifest, double iou_min) {
    std::map<std::string, int> id_to_index;
    for (std::size_t i = 0; i < manifest.images.size(); ++i) {
        id_to_index.emplace(manifest.images[i].id, static_cast<int>(i));
    }

    std::vector<TruthBox> truths;
    for (std::size_t i = 0; i < manifest.images.size(); ++i) {
        for (const GroundTruth& t : manifest.images[i].truths) {
            truths.push_back(TruthBox{t.box, t.class_id, static_cast<int>(i)});
        }
    }

    std::vector<ScoredBox> preds;
    for (const PredictionRecord& rec : run.predictions) {
        if (rec.class_id == kNormalClass) {
            continue;  // not a detection
        }
        const auto it = id_to_index.find(rec.image_id);
        if (it == id_to_index.end()) {
            throw std::runtime_error("evaluate: prediction references unknown image \"" +
                                     rec.image_id + "\"");
        }
        preds.push_back(ScoredBox{rec.confidence, rec.box, rec.class_id, it->second});
    }
    return evaluate_detections(preds, truths, iou_min);
}

namespace {

struct LoadedImage {
    std::string id;
    ScanImage image;
    std::vector<GroundTruth> truths;
};

std::vector<LoadedImage> load_all(const DatasetManifest& manifest) {
    std::vector<LoadedImage> out;
    out.reserve(manifest.images.size());
    for (const ManifestImage& entry : manifest.images) {
        out.push_back(LoadedImage{entry.id, load_image(entry.path), entry.truths});
    }
    return out;
}

}  // namespace

AblationRun run_ablation(const PipelineConfig& base_config, const DatasetManifest& eval_manifest,
                         const DatasetManifest* train_manifest, const std::vector<int>& k_values,
                         const std::vector<int>& m_values, int workers) {
    if (k_values.empty() || m_values.empty()) {
        throw std::invalid_argument("run_ablation: K and M ranges must be nonempty");
    }
    const std::vector<LoadedImage> eval_images = load_all(eval_manifest);
    const DatasetManifest& train_src = train_manifest != nullptr ? *train_manifest : eval_manifest;

    AblationRun run;
    for (int m : m_values) {
        for (int k : k_values) {
            AblationCell cell;
            cell.k = k;
            cell.m = m;
            if (k < 1 || m < 1 || m > k * (k + 1) / 2) {
                cell.feasible = false;
                run.cells.push_back(cell);
                continue;
            }
            PipelineConfig cfg = base_config;
            cfg.k_count = k;
            cfg.m_count = m;
            cfg.validate();

            // Median-of-3 extraction wall time per image, averaged over the corpus;
            // the final repetition's proposals feed classification.
            const std::size_t n = eval_images.size();
            std::vector<double> per_image_seconds(n, 0.0);
            std::vector<ExtractionResult> extractions(n);
            parallel_for(n, workers, [&](std::size_t i) {
                std::array<double, 3> times{};
                for (int rep = 0; rep < 3; ++rep) {
                    const auto start = std::chrono::steady_clock::now();
                    extractions[i] = extract_one(cfg, eval_images[i].image);
                    const auto stop = std::chrono::steady_clock::now();
                    times[static_cast<std::size_t>(rep)] =
                        std::chrono::duration<double>(stop - start).count();
                }
                std::sort(times.begin(), times.end());
                per_image_seconds[i] = times[1];
            });
            double total = 0.0;
            for (double s : per_image_seconds) {
                total += s;
            }
            cell.mean_image_seconds = n > 0 ? total / static_cast<double>(n) : 0.0;

            // Some cells are degenerate by construction: with an even K the
            // top-2 family members are exact negations, extraction yields no
            // proposals, and there is nothing to train on. Such cells keep
            // their timing and report no quality number instead of aborting
            // the sweep.
            try {
                const TrainRun trained = run_train(cfg, train_src, workers);
                if (!trained.errors.empty()) {
                    throw std::runtime_error("run_ablation: training image \"" +
                                             trained.errors.front().image_id +
                                             "\" failed: " + trained.errors.front().message);
                }
                ClassifyRun classified;
                for (std::size_t i = 0; i < n; ++i) {
                    for (const Proposal& p : extractions[i].proposals) {
                        const Detection d = classify(trained.model, p);
                        classified.predictions.push_back(PredictionRecord{
                            eval_images[i].id, p.pass_index, p.contour_label, p.box, d.class_id,
                            d.score});
                    }
                }
                const EvalReport report = run_evaluate(classified, eval_manifest, cfg.iou_min);
                cell.map = report.map;
            } catch (const std::invalid_argument&) {
                cell.map = std::nullopt;
            }
            run.cells.push_back(std::move(cell));
        }
    }
    return run;
}

namespace {

std::string ablation_csv(const AblationRun& run, const std::vector<int>& k_values,
                         const std::vector<int>& m_values,
                         const std::function<std::string(const AblationCell&)>& format) {
    std::ostringstream out;
    out << "M\\K";
    for (int k : k_values) {
        out << ",K=" << k;
    }
    out << '\n';
    std::size_t idx = 0;
    for (int m : m_values) {
        out << "M=" << m;
        for (std::size_t c = 0; c < k_values.size(); ++c) {
            const AblationCell& cell = run.cells.at(idx++);
            out << ',' << (cell.feasible ? format(cell) : std::string("-"));
        }
        out << '\n';
    }
    return out.str();
}

std::string fixed6(double v) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(6);
    s << v;
    return s.str();
}

}  // namespace

std::string ablation_map_csv(const AblationRun& run, const std::vector<int>& k_values,
                             const std::vector<int>& m_values) {
    return ablation_csv(run, k_values, m_values, [](const AblationCell& cell) {
        return cell.map.has_value() ? fixed6(*cell.map) : std::string("undefined");
    });
}

std::string ablation_time_csv(const AblationRun& run, const std::vector<int>& k_values,
                              const std::vector<int>& m_values) {
    return ablation_csv(run, k_values, m_values,
                        [](const AblationCell& cell) { return fixed6(cell.mean_image_seconds); });
}

DatasetManifest run_synth(const SynthSpec& spec, std::uint64_t seed,
                          const std::filesystem::path& out_dir) {
    if (spec.scene_count < 0) {
        throw std::invalid_argument("run_synth: scene_count must be nonnegative");
    }
    std::filesystem::create_directories(out_dir);

    DatasetManifest manifest;
    manifest.registry = ClassRegistry::with_normal({"square", "disk", "triangle"});
    Rng rng(seed);

    int width = 1;
    for (int v = spec.scene_count - 1; v >= 10; v /= 10) {
        ++width;
    }
    width = std::max(width, 3);

    for (int i = 0; i < spec.scene_count; ++i) {
        const std::optional<Scene> scene = generate_scene(spec.scene, spec.shapes, rng);
        if (!scene.has_value()) {
            throw std::runtime_error("run_synth: scene " + std::to_string(i) +
                                     " could not be placed; relax size/margin/separation");
        }
        std::string index = std::to_string(i);
        while (index.size() < static_cast<std::size_t>(width)) {
            index.insert(index.begin(), '0');
        }
        const std::string id = "scene_" + index;
        const std::string filename = id + ".png";
        save_image(scene->image, out_dir / filename);

        ManifestImage entry;
        entry.id = id;
        entry.path = filename;  // relative; resolved when the manifest is loaded
        entry.truths = scene_truths(*scene);
        manifest.images.push_back(std::move(entry));
    }

    save_manifest(manifest, out_dir / "manifest.json");

    // Return resolved paths so callers can use the result directly.
    for (ManifestImage& entry : manifest.images) {
        entry.path = out_dir / entry.path;
    }
    return manifest;
}

}  // namespace cst
