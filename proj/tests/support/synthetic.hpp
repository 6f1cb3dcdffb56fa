#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cxrtask/manifest.hpp"
#include "cxrtask/random.hpp"

namespace cxrtask::testing {

/// Synthetic manifest on 1000x1000 canvases: integer-rectangle polygon
/// annotations with sides in [20, 200], so every box spans >= 20 location
/// bins and masks are codec-exact. Normal images carry no annotations.
inline Manifest make_synthetic_manifest(int n_images, std::uint64_t seed) {
    static const std::vector<std::string> kVocabulary = {
        "consolidation", "cavitation", "pleural effusion", "fibrosis", "nodule", "infiltrate"};

    Manifest manifest;
    manifest.vocabulary = kVocabulary;
    Rng rng(seed);

    for (int i = 0; i < n_images; ++i) {
        ImageInfo image;
        char id[16];
        std::snprintf(id, sizeof(id), "img%04d", i);
        image.image_id = id;
        image.width = 1000;
        image.height = 1000;
        image.quality = (i % 3 == 0) ? Quality::average : Quality::good;

        const std::uint64_t roll = rng.below(10);
        if (roll < 3) {
            image.diagnosis = DiagnosisLabel::normal;
        } else if (roll < 8) {
            image.diagnosis = DiagnosisLabel::active_tb;
        } else if (roll < 9) {
            image.diagnosis = DiagnosisLabel::inactive_tb;
        } else {
            image.diagnosis = DiagnosisLabel::sick_but_no_tb;
        }

        if (image.diagnosis != DiagnosisLabel::normal) {
            const int n_annotations = 1 + static_cast<int>(rng.below(3));
            for (int a = 0; a < n_annotations; ++a) {
                const std::int64_t h = rng.between(20, 200);
                const std::int64_t w = rng.between(20, 200);
                const std::int64_t y0 = rng.between(0, 1000 - h);
                const std::int64_t x0 = rng.between(0, 1000 - w);
                PathologyAnnotation ann;
                ann.image_id = image.image_id;
                ann.pathology = kVocabulary[rng.below(kVocabulary.size())];
                Polygon rect = {{double(x0), double(y0)},
                                {double(x0 + w), double(y0)},
                                {double(x0 + w), double(y0 + h)},
                                {double(x0), double(y0 + h)}};
                ann.geometry = std::vector<Polygon>{rect};
                manifest.annotations.push_back(std::move(ann));
            }
        }
        manifest.images.push_back(std::move(image));
    }
    return manifest;
}

/// Scratch directory under the system temp root, unique per tag.
inline std::string scratch_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / ("cxrtask_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace cxrtask::testing
