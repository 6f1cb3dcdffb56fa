#include "cxrtask/manifest.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace cxrtask {

using nlohmann::ordered_json;

std::string to_string(DiagnosisLabel label) {
    switch (label) {
        case DiagnosisLabel::active_tb: return "active TB";
        case DiagnosisLabel::inactive_tb: return "inactive TB";
        case DiagnosisLabel::normal: return "normal";
        case DiagnosisLabel::sick_but_no_tb: return "sick but no TB";
    }
    throw std::logic_error("unreachable diagnosis label");
}

std::optional<DiagnosisLabel> diagnosis_from_string(const std::string& text) {
    if (text == "active TB") return DiagnosisLabel::active_tb;
    if (text == "inactive TB") return DiagnosisLabel::inactive_tb;
    if (text == "normal") return DiagnosisLabel::normal;
    if (text == "sick but no TB") return DiagnosisLabel::sick_but_no_tb;
    return std::nullopt;
}

std::string to_string(Quality quality) {
    switch (quality) {
        case Quality::good: return "good";
        case Quality::average: return "average";
        case Quality::poor: return "poor";
    }
    throw std::logic_error("unreachable quality");
}

std::optional<Quality> quality_from_string(const std::string& text) {
    if (text == "good") return Quality::good;
    if (text == "average") return Quality::average;
    if (text == "poor") return Quality::poor;
    return std::nullopt;
}

const ImageInfo* Manifest::find_image(const std::string& image_id) const {
    for (const auto& img : images) {
        if (img.image_id == image_id) return &img;
    }
    return nullptr;
}

std::vector<std::size_t> Manifest::annotations_of(const std::string& image_id) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < annotations.size(); ++i) {
        if (annotations[i].image_id == image_id) out.push_back(i);
    }
    return out;
}

std::vector<Violation> validate_manifest(const Manifest& manifest) {
    std::vector<Violation> out;
    std::unordered_set<std::string> ids;
    std::unordered_map<std::string, const ImageInfo*> by_id;

    for (const auto& img : manifest.images) {
        if (img.width < 1 || img.height < 1) {
            out.push_back({img.image_id, "image dimensions must be >= 1"});
        }
        if (!ids.insert(img.image_id).second) {
            out.push_back({img.image_id, "duplicate image id"});
        } else {
            by_id.emplace(img.image_id, &img);
        }
    }

    std::unordered_set<std::string> vocab(manifest.vocabulary.begin(), manifest.vocabulary.end());
    for (const auto& ann : manifest.annotations) {
        auto it = by_id.find(ann.image_id);
        if (it == by_id.end()) {
            out.push_back({ann.image_id, "dangling annotation: unknown image id"});
            continue;
        }
        if (!vocab.count(ann.pathology)) {
            out.push_back({ann.image_id, "pathology '" + ann.pathology + "' not in vocabulary"});
        }
        const ImageInfo& img = *it->second;
        if (img.width < 1 || img.height < 1) continue;
        try {
            BinaryMask mask = rasterize(ann.geometry, img.width, img.height);
            if (mask.empty()) {
                out.push_back({ann.image_id, "annotation rasterizes to an empty mask"});
            }
        } catch (const std::exception& e) {
            out.push_back({ann.image_id, std::string("annotation geometry invalid: ") + e.what()});
        }
    }
    return out;
}

namespace {

Geometry geometry_from_json(const ordered_json& j) {
    if (j.contains("rle")) {
        RleCounts rle;
        for (const auto& v : j.at("rle")) rle.counts.push_back(v.get<std::uint64_t>());
        return rle;
    }
    if (!j.contains("polygon")) {
        throw std::runtime_error("annotation needs a 'polygon' or 'rle' field");
    }
    const auto& poly = j.at("polygon");
    std::vector<Polygon> polys;
    if (!poly.empty() && poly.at(0).is_array() && !poly.at(0).empty() && poly.at(0).at(0).is_array()) {
        // nested form: list of polygons
        for (const auto& p : poly) {
            Polygon vertices;
            for (const auto& v : p) vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
            polys.push_back(std::move(vertices));
        }
    } else {
        Polygon vertices;
        for (const auto& v : poly) vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
        polys.push_back(std::move(vertices));
    }
    return polys;
}

ordered_json geometry_to_json_fields(const Geometry& g) {
    ordered_json j;
    if (const auto* polys = std::get_if<std::vector<Polygon>>(&g)) {
        auto poly_json = [](const Polygon& p) {
            ordered_json out = ordered_json::array();
            for (const auto& v : p) out.push_back({v[0], v[1]});
            return out;
        };
        if (polys->size() == 1) {
            j["polygon"] = poly_json(polys->front());
        } else {
            ordered_json list = ordered_json::array();
            for (const auto& p : *polys) list.push_back(poly_json(p));
            j["polygon"] = list;
        }
    } else if (const auto* rle = std::get_if<RleCounts>(&g)) {
        j["rle"] = rle->counts;
    } else {
        // masks are serialized as uncompressed column-major RLE
        const auto& mask = std::get<BinaryMask>(g);
        std::vector<std::uint64_t> counts;
        std::uint8_t value = 0;
        std::uint64_t run = 0;
        for (int col = 0; col < mask.width; ++col) {
            for (int row = 0; row < mask.height; ++row) {
                if (mask.at(row, col) == value) {
                    ++run;
                } else {
                    counts.push_back(run);
                    value ^= 1;
                    run = 1;
                }
            }
        }
        counts.push_back(run);
        j["rle"] = counts;
    }
    return j;
}

}  // namespace

Manifest parse_manifest_json(const std::string& text) {
    ordered_json j = ordered_json::parse(text);
    Manifest m;
    for (const auto& ij : j.at("images")) {
        ImageInfo info;
        info.image_id = ij.at("id").get<std::string>();
        info.width = ij.at("width").get<int>();
        info.height = ij.at("height").get<int>();
        info.channels = ij.value("channels", 3);
        const std::string q = ij.at("quality").get<std::string>();
        auto quality = quality_from_string(q);
        if (!quality) throw std::runtime_error("unknown quality '" + q + "'");
        info.quality = *quality;
        const std::string d = ij.at("diagnosis").get<std::string>();
        auto diagnosis = diagnosis_from_string(d);
        if (!diagnosis) throw std::runtime_error("unknown diagnosis '" + d + "'");
        info.diagnosis = *diagnosis;
        m.images.push_back(std::move(info));
    }
    if (j.contains("annotations")) {
        for (const auto& aj : j.at("annotations")) {
            PathologyAnnotation ann;
            ann.image_id = aj.at("image_id").get<std::string>();
            ann.pathology = aj.at("pathology").get<std::string>();
            ann.geometry = geometry_from_json(aj);
            m.annotations.push_back(std::move(ann));
        }
    }
    if (j.contains("vocabulary")) {
        for (const auto& v : j.at("vocabulary")) m.vocabulary.push_back(v.get<std::string>());
    }
    return m;
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_manifest_json(buf.str());
}

std::string manifest_to_json(const Manifest& manifest) {
    ordered_json j;
    j["images"] = ordered_json::array();
    for (const auto& img : manifest.images) {
        ordered_json ij;
        ij["id"] = img.image_id;
        ij["width"] = img.width;
        ij["height"] = img.height;
        if (img.channels != 3) ij["channels"] = img.channels;
        ij["quality"] = to_string(img.quality);
        ij["diagnosis"] = to_string(img.diagnosis);
        j["images"].push_back(std::move(ij));
    }
    j["annotations"] = ordered_json::array();
    for (const auto& ann : manifest.annotations) {
        ordered_json aj;
        aj["image_id"] = ann.image_id;
        aj["pathology"] = ann.pathology;
        ordered_json geom = geometry_to_json_fields(ann.geometry);
        for (auto& [key, value] : geom.items()) aj[key] = value;
        j["annotations"].push_back(std::move(aj));
    }
    j["vocabulary"] = manifest.vocabulary;
    return j.dump(2) + "\n";
}

void save_manifest(const Manifest& manifest, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest file: " + path);
    out << manifest_to_json(manifest);
}

}  // namespace cxrtask
