#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "cxrtask/output_parser.hpp"
#include "cxrtask/random.hpp"
#include "cxrtask/token_codec.hpp"

using namespace cxrtask;

namespace {

ImageInfo image_of(int width, int height) {
    ImageInfo image;
    image.image_id = "test";
    image.width = width;
    image.height = height;
    return image;
}

const std::vector<std::string> kLabels = {"consolidation", "cavitation", "pleural effusion",
                                          "fibrosis", "nodule"};

std::string random_junk(Rng& rng) {
    std::string s;
    const std::size_t len = rng.below(120);
    for (std::size_t i = 0; i < len; ++i) {
        switch (rng.below(4)) {
            case 0: s.push_back(static_cast<char>(rng.below(256)));
                break;
            case 1: s.push_back("<loc0seg>;123 "[rng.below(14)]);
                break;
            case 2: s += "<loc";
                break;
            default: s.push_back(static_cast<char>('a' + rng.below(26)));
                break;
        }
    }
    return s;
}

}  // namespace

TEST_CASE("canonical detection strings parse back to their instances") {
    const ImageInfo image = image_of(1000, 1000);
    const auto parsed =
        parse_detection("<loc0100><loc0200><loc0300><loc0400> consolidation", image);
    CHECK(parsed.diagnostics.empty());
    REQUIRE(parsed.instances.size() == 1);
    CHECK(parsed.instances[0].label == "consolidation");
    CHECK(parsed.instances[0].loc == std::array<int, 4>{100, 200, 300, 400});
    CHECK(parsed.instances[0].box.y_min == doctest::Approx(100.5));
}

TEST_CASE("malformed detection segments drop with diagnostics") {
    const ImageInfo image = image_of(1000, 1000);
    SUBCASE("too few tokens") {
        const auto parsed = parse_detection("<loc0100>cat", image);
        CHECK(parsed.instances.empty());
        CHECK(parsed.diagnostics.size() == 1);
    }
    SUBCASE("missing label") {
        const auto parsed = parse_detection("<loc0100><loc0200><loc0300><loc0400>", image);
        CHECK(parsed.instances.empty());
        CHECK(parsed.diagnostics.size() == 1);
    }
    SUBCASE("loc index out of range") {
        const auto parsed = parse_detection("<loc1000><loc0200><loc0300><loc0400> x", image);
        CHECK(parsed.instances.empty());
        CHECK(parsed.diagnostics.size() == 1);
    }
    SUBCASE("degenerate box") {
        const auto parsed = parse_detection("<loc0100><loc0200><loc0100><loc0400> x", image);
        CHECK(parsed.instances.empty());
        REQUIRE(parsed.diagnostics.size() == 1);
        CHECK(parsed.diagnostics[0].find("degenerate") != std::string::npos);
    }
    SUBCASE("tokens inside the label") {
        const auto parsed =
            parse_detection("<loc0100><loc0200><loc0300><loc0400> a <loc0001> b", image);
        CHECK(parsed.instances.empty());
        CHECK(parsed.diagnostics.size() == 1);
    }
    SUBCASE("one good segment survives next to a bad one") {
        const auto parsed = parse_detection(
            "<loc0100><loc0200><loc0300><loc0400> consolidation ; garbage", image);
        CHECK(parsed.instances.size() == 1);
        CHECK(parsed.diagnostics.size() == 1);
    }
}

TEST_CASE("two detection instances keep emission order") {
    const ImageInfo image = image_of(1000, 1000);
    const auto parsed = parse_detection(
        "<loc0100><loc0200><loc0300><loc0400> consolidation ; "
        "<loc0001><loc0002><loc0003><loc0004> cavitation",
        image);
    REQUIRE(parsed.instances.size() == 2);
    CHECK(parsed.instances[0].label == "consolidation");
    CHECK(parsed.instances[1].label == "cavitation");
    CHECK(parsed.diagnostics.empty());
}

TEST_CASE("segmentation grammar needs 4 loc + 16 seg tokens") {
    const ImageInfo image = image_of(1000, 1000);
    std::string canonical = "<loc0100><loc0100><loc0400><loc0400>";
    for (int i = 0; i < 16; ++i) canonical += "<seg001>";
    canonical += " fibrosis";

    SUBCASE("canonical instance parses and round trips") {
        const auto parsed = parse_segmentation(canonical, image);
        CHECK(parsed.diagnostics.empty());
        REQUIRE(parsed.instances.size() == 1);
        const auto& instance = parsed.instances[0];
        CHECK(instance.label == "fibrosis");
        CHECK(instance.mask.count() > 0);
        // re-encode: tokens must match what was parsed
        const MaskTokens again =
            encode_mask(instance.mask, instance.box, image);
        for (int k = 0; k < 4; ++k) CHECK(again.box.tokens[k].index == instance.loc[k]);
        for (int k = 0; k < 16; ++k) CHECK(again.seg[k].index == instance.seg[k]);
    }
    SUBCASE("15 seg tokens are an arity violation") {
        std::string short_seg = "<loc0100><loc0100><loc0400><loc0400>";
        for (int i = 0; i < 15; ++i) short_seg += "<seg001>";
        short_seg += " fibrosis";
        const auto parsed = parse_segmentation(short_seg, image);
        CHECK(parsed.instances.empty());
        CHECK(parsed.diagnostics.size() == 1);
    }
    SUBCASE("seg index beyond the codebook is a vocabulary violation") {
        std::string bad = canonical;
        const auto pos = bad.find("<seg001>");
        bad.replace(pos, 8, "<seg200>");
        const auto parsed = parse_segmentation(bad, image);
        CHECK(parsed.instances.empty());
        REQUIRE(parsed.diagnostics.size() == 1);
        CHECK(parsed.diagnostics[0].find("out of range") != std::string::npos);
    }
    SUBCASE("all-zero seg tokens drop as an empty mask") {
        std::string zeros = "<loc0100><loc0100><loc0400><loc0400>";
        for (int i = 0; i < 16; ++i) zeros += "<seg000>";
        zeros += " fibrosis";
        const auto parsed = parse_segmentation(zeros, image);
        CHECK(parsed.instances.empty());
        REQUIRE(parsed.diagnostics.size() == 1);
        CHECK(parsed.diagnostics[0].find("empty mask") != std::string::npos);
    }
}

TEST_CASE("normalize_answer canonicalizes case, punctuation and number words") {
    CHECK(normalize_answer("Yes.") == "yes");
    CHECK(normalize_answer("  Three ") == "3");
    CHECK(normalize_answer("upper zone of the right lung") == "upper zone of the right lung");
    CHECK(normalize_answer("NO,") == "no");
    CHECK(normalize_answer("two  nodules") == "2 nodules");
    CHECK(normalize_answer("") == "");
    CHECK(normalize_answer("...") == "");
    CHECK(normalize_answer("yes..") == "yes");
    CHECK(normalize_answer("a\tb\nc") == "a b c");
}

TEST_CASE("normalize_answer is idempotent on arbitrary input") {
    Rng rng(5);
    for (int trial = 0; trial < 3000; ++trial) {
        const std::string junk = random_junk(rng);
        const std::string once = normalize_answer(junk);
        REQUIRE(normalize_answer(once) == once);
    }
}

TEST_CASE("parse is the left inverse of render on canonical instance lists") {
    const ImageInfo image = image_of(1000, 1000);
    Rng rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<DetectionInstance> detections;
        const int n = 1 + static_cast<int>(rng.below(4));
        for (int i = 0; i < n; ++i) {
            const int y0 = static_cast<int>(rng.below(900));
            const int x0 = static_cast<int>(rng.below(900));
            const int y1 = y0 + 1 + static_cast<int>(rng.below(999 - y0));
            const int x1 = x0 + 1 + static_cast<int>(rng.below(999 - x0));
            detections.push_back({BoxTokens{{LocToken{y0}, LocToken{x0}, LocToken{y1}, LocToken{x1}}},
                                  kLabels[rng.below(kLabels.size())]});
        }
        const std::string suffix = render_suffix(detections);
        const auto parsed = parse_detection(suffix, image);
        REQUIRE(parsed.diagnostics.empty());
        REQUIRE(parsed.instances.size() == detections.size());
        std::vector<DetectionInstance> round;
        for (const auto& p : parsed.instances) {
            round.push_back({BoxTokens{{LocToken{p.loc[0]}, LocToken{p.loc[1]}, LocToken{p.loc[2]},
                                        LocToken{p.loc[3]}}},
                             p.label});
        }
        REQUIRE(render_suffix(round) == suffix);
    }
}

TEST_CASE("parsers are total over arbitrary bytes") {
    const ImageInfo image = image_of(640, 480);
    Rng rng(13);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::string junk = random_junk(rng);
        const auto det = parse_detection(junk, image);
        const auto seg = parse_segmentation(junk, image);
        REQUIRE(det.instances.size() <= 40);
        REQUIRE(seg.instances.size() <= 40);
        normalize_answer(junk);
    }
}

TEST_CASE("parse_output dispatches per task") {
    const ImageInfo image = image_of(1000, 1000);
    const auto diagnosis = parse_output(Task::diagnosis, "Active TB.", image);
    CHECK(diagnosis.text == "active tb");
    const auto report = parse_output(Task::report, "Findings: no findings.", image);
    CHECK(report.text == "Findings: no findings.");
    const auto detection =
        parse_output(Task::detection, "<loc0001><loc0002><loc0ographic", image);
    CHECK(detection.detections.empty());
    CHECK(!detection.diagnostics.empty());
}

TEST_CASE("predictions JSONL round trips") {
    const auto dir = std::filesystem::temp_directory_path() / "cxrtask_pred_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "pred.jsonl").string();
    const std::vector<Prediction> predictions = {
        {"img0001", Task::detection, "<loc0001><loc0002><loc0003><loc0004> nodule"},
        {"img0002", Task::vqa, "yes"},
    };
    write_predictions(predictions, path);
    const auto round = read_predictions(path);
    REQUIRE(round.size() == 2);
    CHECK(round[0].image_id == "img0001");
    CHECK(round[0].task == Task::detection);
    CHECK(round[0].output == predictions[0].output);
    CHECK(round[1].task == Task::vqa);
    std::filesystem::remove_all(dir);
}
