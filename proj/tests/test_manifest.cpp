#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cxrtask/manifest.hpp"

using namespace cxrtask;

namespace {

Manifest two_image_manifest() {
    Manifest m;
    m.vocabulary = {"consolidation", "cavitation"};
    ImageInfo a;
    a.image_id = "a";
    a.width = 100;
    a.height = 80;
    a.quality = Quality::good;
    a.diagnosis = DiagnosisLabel::active_tb;
    ImageInfo b;
    b.image_id = "b";
    b.width = 64;
    b.height = 64;
    b.quality = Quality::average;
    b.diagnosis = DiagnosisLabel::normal;
    m.images = {a, b};

    PathologyAnnotation ann;
    ann.image_id = "a";
    ann.pathology = "consolidation";
    ann.geometry = std::vector<Polygon>{{{10, 10}, {30, 10}, {30, 25}, {10, 25}}};
    m.annotations = {ann};
    return m;
}

}  // namespace

TEST_CASE("well-formed manifest has no violations") {
    CHECK(validate_manifest(two_image_manifest()).empty());
}

TEST_CASE("dangling annotation is reported once") {
    Manifest m = two_image_manifest();
    m.annotations[0].image_id = "ghost";
    const auto violations = validate_manifest(m);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].image_id == "ghost");
    CHECK(violations[0].message.find("dangling") != std::string::npos);
}

TEST_CASE("duplicate image id is reported once") {
    Manifest m = two_image_manifest();
    m.images[1].image_id = "a";
    m.annotations.clear();
    const auto violations = validate_manifest(m);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].message.find("duplicate") != std::string::npos);
}

TEST_CASE("bad dimensions, unknown pathology and empty masks are violations") {
    Manifest m = two_image_manifest();
    m.images[1].width = 0;
    m.annotations[0].pathology = "dragon pox";
    PathologyAnnotation empty_ann;
    empty_ann.image_id = "a";
    empty_ann.pathology = "cavitation";
    empty_ann.geometry = RleCounts{{std::uint64_t(100 * 80)}};  // all zeros
    m.annotations.push_back(empty_ann);
    const auto violations = validate_manifest(m);
    CHECK(violations.size() == 3);
}

TEST_CASE("manifest JSON round trip preserves content") {
    const Manifest m = two_image_manifest();
    const Manifest parsed = parse_manifest_json(manifest_to_json(m));
    REQUIRE(parsed.images.size() == 2);
    CHECK(parsed.images[0].image_id == "a");
    CHECK(parsed.images[0].width == 100);
    CHECK(parsed.images[0].height == 80);
    CHECK(parsed.images[0].channels == 3);
    CHECK(parsed.images[0].quality == Quality::good);
    CHECK(parsed.images[0].diagnosis == DiagnosisLabel::active_tb);
    CHECK(parsed.vocabulary == m.vocabulary);
    REQUIRE(parsed.annotations.size() == 1);
    CHECK(parsed.annotations[0].pathology == "consolidation");
    const BinaryMask original = rasterize(m.annotations[0].geometry, 100, 80);
    const BinaryMask round = rasterize(parsed.annotations[0].geometry, 100, 80);
    CHECK(original == round);
}

TEST_CASE("RLE and nested polygon forms parse") {
    const std::string text = R"({
      "images": [{"id": "x", "width": 4, "height": 4, "quality": "poor", "diagnosis": "sick but no TB"}],
      "annotations": [
        {"image_id": "x", "pathology": "nodule", "rle": [0, 16]},
        {"image_id": "x", "pathology": "nodule",
         "polygon": [[[0,0],[2,0],[2,2],[0,2]], [[2,2],[4,2],[4,4],[2,4]]]}
      ],
      "vocabulary": ["nodule"]
    })";
    const Manifest m = parse_manifest_json(text);
    CHECK(m.images[0].quality == Quality::poor);
    CHECK(m.images[0].diagnosis == DiagnosisLabel::sick_but_no_tb);
    CHECK(rasterize(m.annotations[0].geometry, 4, 4).count() == 16);
    CHECK(rasterize(m.annotations[1].geometry, 4, 4).count() == 8);
    CHECK(validate_manifest(m).empty());
}

TEST_CASE("diagnosis and quality string forms are fixed") {
    CHECK(to_string(DiagnosisLabel::active_tb) == "active TB");
    CHECK(to_string(DiagnosisLabel::inactive_tb) == "inactive TB");
    CHECK(to_string(DiagnosisLabel::normal) == "normal");
    CHECK(to_string(DiagnosisLabel::sick_but_no_tb) == "sick but no TB");
    for (int d = 0; d < 4; ++d) {
        const auto label = static_cast<DiagnosisLabel>(d);
        CHECK(diagnosis_from_string(to_string(label)) == label);
    }
    CHECK(!diagnosis_from_string("Active TB"));
    for (Quality q : {Quality::good, Quality::average, Quality::poor}) {
        CHECK(quality_from_string(to_string(q)) == q);
    }
}

TEST_CASE("unknown enum strings fail manifest parsing") {
    const std::string bad = R"({"images": [{"id":"x","width":4,"height":4,
        "quality":"excellent","diagnosis":"normal"}]})";
    CHECK_THROWS(parse_manifest_json(bad));
}
