#include "cst/manifest.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cst {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error("manifest " + path.string() + ": " + what);
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(path, "cannot open file");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(path, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("classes") || !j["classes"].is_array()) {
        fail(path, "missing \"classes\" array");
    }

    std::vector<std::string> class_names;
    for (const auto& name : j["classes"]) {
        if (!name.is_string()) {
            fail(path, "\"classes\" entries must be strings");
        }
        class_names.push_back(name.get<std::string>());
    }

    DatasetManifest manifest;
    try {
        manifest.registry = ClassRegistry::with_normal(class_names);
    } catch (const std::exception& e) {
        fail(path, e.what());
    }

    const std::filesystem::path base = path.has_parent_path() ? path.parent_path()
                                                              : std::filesystem::path(".");
    std::set<std::string> seen_ids;
    if (j.contains("images")) {
        if (!j["images"].is_array()) {
            fail(path, "\"images\" must be an array");
        }
        for (const auto& img : j["images"]) {
            if (!img.is_object() || !img.contains("id") || !img.contains("path")) {
                fail(path, "each image needs \"id\" and \"path\"");
            }
            ManifestImage entry;
            entry.id = img["id"].get<std::string>();
            if (!seen_ids.insert(entry.id).second) {
                fail(path, "duplicate image id \"" + entry.id + "\"");
            }
            std::filesystem::path img_path = img["path"].get<std::string>();
            entry.path = img_path.is_absolute() ? img_path : base / img_path;

            if (img.contains("truths")) {
                if (!img["truths"].is_array()) {
                    fail(path, "image \"" + entry.id + "\": \"truths\" must be an array");
                }
                for (const auto& t : img["truths"]) {
                    if (!t.is_object() || !t.contains("class") || !t.contains("box")) {
                        fail(path, "image \"" + entry.id +
                                       "\": each truth needs \"class\" and \"box\"");
                    }
                    const std::string cls_name = t["class"].get<std::string>();
                    const int cls = manifest.registry.id_of(cls_name);
                    if (cls < 0) {
                        fail(path, "image \"" + entry.id + "\": unknown class \"" + cls_name +
                                       "\"");
                    }
                    const auto& b = t["box"];
                    if (!b.is_object() || !b.contains("top") || !b.contains("left") ||
                        !b.contains("height") || !b.contains("width")) {
                        fail(path, "image \"" + entry.id +
                                       "\": box needs top/left/height/width");
                    }
                    BoundingBox box{b["top"].get<int>(), b["left"].get<int>(),
                                    b["height"].get<int>(), b["width"].get<int>()};
                    if (!box.valid() || box.top < 0 || box.left < 0) {
                        fail(path, "image \"" + entry.id +
                                       "\": box must sit at nonnegative coordinates with "
                                       "positive extent");
                    }
                    entry.truths.push_back(GroundTruth{cls, box});
                }
            }
            manifest.images.push_back(std::move(entry));
        }
    }
    return manifest;
}

std::string manifest_to_json(const DatasetManifest& manifest) {
    nlohmann::json j;
    nlohmann::json classes = nlohmann::json::array();
    // Skip the implicit no-threat class at index 0.
    for (int i = 1; i < manifest.registry.size(); ++i) {
        classes.push_back(manifest.registry.name_of(i));
    }
    j["classes"] = classes;
    nlohmann::json images = nlohmann::json::array();
    for (const ManifestImage& img : manifest.images) {
        nlohmann::json e;
        e["id"] = img.id;
        e["path"] = img.path.string();
        nlohmann::json truths = nlohmann::json::array();
        for (const GroundTruth& t : img.truths) {
            truths.push_back({{"class", manifest.registry.name_of(t.class_id)},
                              {"box",
                               {{"top", t.box.top},
                                {"left", t.box.left},
                                {"height", t.box.height},
                                {"width", t.box.width}}}});
        }
        e["truths"] = truths;
        images.push_back(e);
    }
    j["images"] = images;
    return j.dump(2) + "\n";
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        fail(path, "cannot open file for writing");
    }
    out << manifest_to_json(manifest);
    if (!out) {
        fail(path, "write failed");
    }
}

}  // namespace cst
