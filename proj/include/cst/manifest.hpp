#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cst/box.hpp"
#include "cst/recognition.hpp"

namespace cst {

struct ManifestImage {
    std::string id;
    std::filesystem::path path;  // resolved relative to the manifest file
    std::vector<GroundTruth> truths;
};

/// One JSON file describing a dataset: the suspicious class names and the
/// annotated images. Class index 0 is always the implicit no-threat class;
/// truth class ids index into the registry built from the listed names.
struct DatasetManifest {
    ClassRegistry registry;
    std::vector<ManifestImage> images;
};

/// Parse a manifest JSON file:
///   {"classes": ["square", ...],
///    "images": [{"id": "...", "path": "...",
///                "truths": [{"class": "square",
///                            "box": {"top":..,"left":..,"height":..,"width":..}}]}]}
/// Relative image paths resolve against the manifest's directory. Throws
/// std::runtime_error naming the offending field on malformed input
/// (duplicate ids, unknown classes, non-positive box extents).
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Serialize back to the same JSON schema (paths as stored, sorted keys).
std::string manifest_to_json(const DatasetManifest& manifest);

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace cst
