#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cxrtask/geometry.hpp"

namespace cxrtask {

enum class Quality { good, average, poor };

enum class DiagnosisLabel { active_tb, inactive_tb, normal, sick_but_no_tb };

/// Fixed string forms: "active TB", "inactive TB", "normal", "sick but no TB".
std::string to_string(DiagnosisLabel label);
std::optional<DiagnosisLabel> diagnosis_from_string(const std::string& text);

std::string to_string(Quality quality);
std::optional<Quality> quality_from_string(const std::string& text);

struct ImageInfo {
    std::string image_id;
    int width = 0;
    int height = 0;
    int channels = 3;  // informational
    Quality quality = Quality::good;
    DiagnosisLabel diagnosis = DiagnosisLabel::normal;
};

struct PathologyAnnotation {
    std::string image_id;
    std::string pathology;
    Geometry geometry;
};

struct Manifest {
    std::vector<ImageInfo> images;
    std::vector<PathologyAnnotation> annotations;
    std::vector<std::string> vocabulary;

    const ImageInfo* find_image(const std::string& image_id) const;
    std::vector<std::size_t> annotations_of(const std::string& image_id) const;
};

struct Violation {
    std::string image_id;  // empty when no single image is at fault
    std::string message;
};

/// Empty result iff every type invariant holds. Violations are data, not
/// failures: duplicate ids, dangling annotations, labels outside the
/// vocabulary, bad dimensions, and geometry that fails to rasterize to a
/// nonempty in-bounds mask are each reported with image context.
std::vector<Violation> validate_manifest(const Manifest& manifest);

/// Manifest document I/O. One JSON object:
///   {"images":[{"id","width","height","quality","diagnosis"}],
///    "annotations":[{"image_id","pathology","polygon":[[x,y],...] | "rle":[runs]}],
///    "vocabulary":[...]}
/// "channels" is accepted per image and defaults to 3. An annotation's
/// "polygon" may also be a list of polygons; the union is rasterized.
Manifest parse_manifest_json(const std::string& text);
Manifest load_manifest(const std::string& path);
std::string manifest_to_json(const Manifest& manifest);
void save_manifest(const Manifest& manifest, const std::string& path);

}  // namespace cxrtask
