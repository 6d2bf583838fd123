#include "cst/config.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cst {

void PipelineConfig::validate() const {
    if (k_count < 1) {
        throw std::invalid_argument("k_count must satisfy K >= 1");
    }
    if (m_count < 1 || m_count > family_size()) {
        throw std::invalid_argument("m_count must satisfy 1 <= M <= K(K+1)/2 (= " +
                                    std::to_string(family_size()) + " for K = " +
                                    std::to_string(k_count) + ")");
    }
    if (max_passes < 1) {
        throw std::invalid_argument("max_passes must satisfy max_passes >= 1");
    }
    if (grid.grid_rows < 1 || grid.grid_cols < 1) {
        throw std::invalid_argument("grid dimensions must satisfy rows >= 1 and cols >= 1");
    }
    if (hist_eq.clip_limit < 0.0) {
        throw std::invalid_argument("clip_limit must satisfy clip_limit >= 0");
    }
    if (diffusion.iterations < 0) {
        throw std::invalid_argument("diffusion iterations must satisfy iterations >= 0");
    }
    if (!(diffusion.step > 0.0) || diffusion.step > 0.25) {
        throw std::invalid_argument("diffusion step must satisfy 0 < step <= 0.25");
    }
    if (!(diffusion.kappa > 0.0)) {
        throw std::invalid_argument("diffusion kappa must satisfy kappa > 0");
    }
    if (contour.min_blob_area < 0) {
        throw std::invalid_argument("min_blob_area must satisfy min_blob_area >= 0");
    }
    if (contour.histogram_bins < 2) {
        throw std::invalid_argument("histogram_bins must satisfy bins >= 2");
    }
    if (!(sor.omega > 0.0) || sor.omega >= 2.0) {
        throw std::invalid_argument("sor omega must satisfy 0 < omega < 2");
    }
    if (!(sor.tolerance > 0.0)) {
        throw std::invalid_argument("sor tolerance must satisfy tolerance > 0");
    }
    if (sor.sweep_factor < 1) {
        throw std::invalid_argument("sor sweep_factor must satisfy sweep_factor >= 1");
    }
    if (min_overlap_fraction < 0.0 || min_overlap_fraction >= 1.0) {
        throw std::invalid_argument("min_overlap_fraction must satisfy 0 <= f < 1");
    }
    if (!(iou_min > 0.0) || iou_min > 1.0) {
        throw std::invalid_argument("iou_min must satisfy 0 < iou_min <= 1");
    }
}

namespace {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

}  // namespace

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("config " + path.string() + ": cannot open file");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config " + path.string() + ": invalid JSON: " + e.what());
    }
    PipelineConfig c;
    read_field(j, "k_count", c.k_count);
    read_field(j, "m_count", c.m_count);
    read_field(j, "max_passes", c.max_passes);
    read_field(j, "use_enhancement", c.use_enhancement);
    read_field(j, "grid_rows", c.grid.grid_rows);
    read_field(j, "grid_cols", c.grid.grid_cols);
    read_field(j, "image_area_denominator", c.hist_eq.image_area_denominator);
    read_field(j, "clip_limit", c.hist_eq.clip_limit);
    read_field(j, "diffusion_iterations", c.diffusion.iterations);
    read_field(j, "diffusion_step", c.diffusion.step);
    read_field(j, "diffusion_kappa", c.diffusion.kappa);
    read_field(j, "min_blob_area", c.contour.min_blob_area);
    read_field(j, "histogram_bins", c.contour.histogram_bins);
    read_field(j, "min_dynamic_range", c.contour.min_dynamic_range);
    read_field(j, "sor_omega", c.sor.omega);
    read_field(j, "sor_tolerance", c.sor.tolerance);
    read_field(j, "sor_sweep_factor", c.sor.sweep_factor);
    read_field(j, "min_overlap_fraction", c.min_overlap_fraction);
    read_field(j, "iou_min", c.iou_min);
    read_field(j, "seed", c.seed);
    c.validate();
    return c;
}

std::string config_to_json(const PipelineConfig& c) {
    nlohmann::json j;
    j["k_count"] = c.k_count;
    j["m_count"] = c.m_count;
    j["max_passes"] = c.max_passes;
    j["use_enhancement"] = c.use_enhancement;
    j["grid_rows"] = c.grid.grid_rows;
    j["grid_cols"] = c.grid.grid_cols;
    j["image_area_denominator"] = c.hist_eq.image_area_denominator;
    j["clip_limit"] = c.hist_eq.clip_limit;
    j["diffusion_iterations"] = c.diffusion.iterations;
    j["diffusion_step"] = c.diffusion.step;
    j["diffusion_kappa"] = c.diffusion.kappa;
    j["min_blob_area"] = c.contour.min_blob_area;
    j["histogram_bins"] = c.contour.histogram_bins;
    j["min_dynamic_range"] = c.contour.min_dynamic_range;
    j["sor_omega"] = c.sor.omega;
    j["sor_tolerance"] = c.sor.tolerance;
    j["sor_sweep_factor"] = c.sor.sweep_factor;
    j["min_overlap_fraction"] = c.min_overlap_fraction;
    j["iou_min"] = c.iou_min;
    j["seed"] = c.seed;
    return j.dump(2) + "\n";
}

void save_config(const PipelineConfig& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("config " + path.string() + ": cannot open file for writing");
    }
    out << config_to_json(c);
    if (!out) {
        throw std::runtime_error("config " + path.string() + ": write failed");
    }
}

}  // namespace cst
