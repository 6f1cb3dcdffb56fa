#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "cxrtask/dataset_builder.hpp"
#include "cxrtask/output_parser.hpp"
#include "support/synthetic.hpp"

using namespace cxrtask;
using cxrtask::testing::make_synthetic_manifest;

namespace {

ImageInfo image_of(int width, int height, DiagnosisLabel diagnosis = DiagnosisLabel::active_tb) {
    ImageInfo image;
    image.image_id = "img";
    image.width = width;
    image.height = height;
    image.diagnosis = diagnosis;
    return image;
}

Manifest tiny_manifest() {
    Manifest m;
    m.vocabulary = {"consolidation", "cavitation", "nodule"};
    for (int i = 0; i < 12; ++i) {
        ImageInfo image;
        image.image_id = "img" + std::to_string(i);
        image.width = 1000;
        image.height = 1000;
        image.diagnosis = (i % 4 == 0) ? DiagnosisLabel::normal : DiagnosisLabel::active_tb;
        m.images.push_back(image);
    }
    auto rect_ann = [&](const std::string& id, const std::string& pathology, double x0, double y0,
                        double x1, double y1) {
        PathologyAnnotation ann;
        ann.image_id = id;
        ann.pathology = pathology;
        ann.geometry = std::vector<Polygon>{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
        m.annotations.push_back(ann);
    };
    // img1: two consolidations + one cavitation; img2: one nodule
    rect_ann("img1", "consolidation", 100, 100, 200, 180);
    rect_ann("img1", "consolidation", 600, 700, 820, 900);
    rect_ann("img1", "cavitation", 300, 40, 500, 200);
    rect_ann("img2", "nodule", 450, 450, 550, 560);
    for (int i = 3; i < 12; ++i) {
        if (i % 4 != 0) {
            rect_ann("img" + std::to_string(i), "consolidation", 100, 100, 300, 300);
        }
    }
    return m;
}

}  // namespace

TEST_CASE("split apportions 8:1:1 with largest remainders") {
    SUBCASE("exact ratio at 10 images") {
        Manifest m = tiny_manifest();
        m.images.resize(10);
        const SplitAssignment split = split_images(m, 7);
        CHECK(split.of(Split::train).size() == 8);
        CHECK(split.of(Split::validation).size() == 1);
        CHECK(split.of(Split::test).size() == 1);
    }
    SUBCASE("1149 images go 919/115/115") {
        const Manifest m = make_synthetic_manifest(1149, 99);
        const SplitAssignment split = split_images(m, 1);
        CHECK(split.of(Split::train).size() == 919);
        CHECK(split.of(Split::validation).size() == 115);
        CHECK(split.of(Split::test).size() == 115);
    }
    SUBCASE("same seed reproduces the assignment") {
        const Manifest m = tiny_manifest();
        const SplitAssignment a = split_images(m, 42);
        const SplitAssignment b = split_images(m, 42);
        CHECK(a.ids == b.ids);
        const SplitAssignment c = split_images(m, 43);
        CHECK(a.ids != c.ids);  // overwhelmingly likely
    }
    SUBCASE("fewer than 10 images is an error") {
        Manifest m = tiny_manifest();
        m.images.resize(9);
        CHECK_THROWS_AS(split_images(m, 0), std::invalid_argument);
    }
    SUBCASE("partition is exhaustive and disjoint") {
        const Manifest m = tiny_manifest();
        const SplitAssignment split = split_images(m, 4);
        std::set<std::string> seen;
        for (Split s : kAllSplits) {
            for (const auto& id : split.of(s)) REQUIRE(seen.insert(id).second);
        }
        CHECK(seen.size() == m.images.size());
    }
}

TEST_CASE("split JSON round trips") {
    const Manifest m = tiny_manifest();
    const SplitAssignment split = split_images(m, 5);
    const SplitAssignment round = split_from_json(split_to_json(split));
    CHECK(round.seed == split.seed);
    CHECK(round.ids == split.ids);
}

TEST_CASE("locate_zone uses half-open thirds and radiographic laterality") {
    const ImageInfo image = image_of(1000, 900);
    SUBCASE("upper-left image third is the upper right lung") {
        const ZoneSide zs = locate_zone(BBox{80, 90, 100, 110}, image);  // centroid (90, 100)
        CHECK(zs.zone == "upper");
        CHECK(zs.side == "right");
    }
    SUBCASE("middle height, far image-right is the left lung") {
        const ZoneSide zs = locate_zone(BBox{440, 880, 460, 920}, image);  // centroid (450, 900)
        CHECK(zs.zone == "middle");
        CHECK(zs.side == "left");
    }
    SUBCASE("centroid exactly at H/3 falls in the middle zone") {
        const ZoneSide zs = locate_zone(BBox{250, 0, 350, 100}, image);  // centroid y = 300 = H/3
        CHECK(zs.zone == "middle");
    }
}

TEST_CASE("compose_report frames findings and impression") {
    SUBCASE("normal image reads 'no findings'") {
        const ImageInfo image = image_of(1000, 1000, DiagnosisLabel::normal);
        CHECK(compose_report(image, {}) == "Findings: no findings. Impression: normal.");
    }
    SUBCASE("upper-left finding names the upper zone of the right lung") {
        const ImageInfo image = image_of(900, 900);
        const std::string report =
            compose_report(image, {{"consolidation", BBox{50, 50, 150, 150}}});
        CHECK(report ==
              "Findings: There is consolidation in the upper zone of the right lung. "
              "Impression: active TB.");
    }
    SUBCASE("two findings keep annotation order") {
        const ImageInfo image = image_of(900, 900);
        const std::string report = compose_report(
            image, {{"cavitation", BBox{50, 50, 150, 150}}, {"nodule", BBox{700, 700, 800, 800}}});
        const auto cav = report.find("cavitation");
        const auto nod = report.find("nodule");
        REQUIRE(cav != std::string::npos);
        REQUIRE(nod != std::string::npos);
        CHECK(cav < nod);
    }
    SUBCASE("annotated non-normal image without findings still reads 'no findings'") {
        const ImageInfo image = image_of(1000, 1000, DiagnosisLabel::sick_but_no_tb);
        CHECK(compose_report(image, {}) ==
              "Findings: no findings. Impression: sick but no TB.");
    }
}

TEST_CASE("build_diagnosis emits one record per image with the fixed prompt") {
    const Manifest m = tiny_manifest();
    const SplitAssignment split = split_images(m, 1);
    const TaskDataset ds = build_diagnosis(m, split);
    CHECK(ds.total() == m.images.size());
    for (Split s : kAllSplits) {
        for (const auto& r : ds.of(s)) {
            CHECK(r.prefix == "What is the diagnosis in the X-ray image?");
            CHECK(!r.suffix.empty());
            if (r.image_id == "img0") CHECK(r.suffix == "normal");
            if (r.image_id == "img1") CHECK(r.suffix == "active TB");
        }
    }
}

TEST_CASE("build_detection prefixes distinct pathologies and skips bare images") {
    const Manifest m = tiny_manifest();
    const SplitAssignment split = split_images(m, 1);
    const TaskDataset ds = build_detection(m, split);
    std::size_t with_annotations = 0;
    for (const auto& img : m.images) {
        if (!m.annotations_of(img.image_id).empty()) ++with_annotations;
    }
    CHECK(ds.total() == with_annotations);
    bool saw_img1 = false;
    for (Split s : kAllSplits) {
        for (const auto& r : ds.of(s)) {
            if (r.image_id == "img1") {
                saw_img1 = true;
                CHECK(r.prefix == "detect consolidation ; cavitation");
                const ImageInfo* image = m.find_image(r.image_id);
                const auto parsed = parse_detection(r.suffix, *image);
                CHECK(parsed.diagnostics.empty());
                REQUIRE(parsed.instances.size() == 3);
                CHECK(parsed.instances[0].label == "consolidation");
                CHECK(parsed.instances[2].label == "cavitation");
            }
        }
    }
    CHECK(saw_img1);
}

TEST_CASE("build_segmentation lists the full vocabulary in every prefix") {
    const Manifest m = tiny_manifest();
    const SplitAssignment split = split_images(m, 1);
    const TaskDataset ds = build_segmentation(m, split);
    for (Split s : kAllSplits) {
        for (const auto& r : ds.of(s)) {
            CHECK(r.prefix == "segment consolidation ; cavitation ; nodule");
            const ImageInfo* image = m.find_image(r.image_id);
            const auto parsed = parse_segmentation(r.suffix, *image);
            CHECK(parsed.diagnostics.empty());
            CHECK(parsed.instances.size() == m.annotations_of(r.image_id).size());
            // re-rendering the parsed instances must reproduce the suffix
            std::vector<SegmentationInstance> round;
            for (const auto& p : parsed.instances) {
                MaskTokens tokens;
                for (int k = 0; k < 4; ++k) tokens.box.tokens[k].index = p.loc[k];
                for (int k = 0; k < 16; ++k) tokens.seg[k].index = p.seg[k];
                round.push_back({tokens, p.label});
            }
            CHECK(render_suffix(round) == r.suffix);
        }
    }
}

TEST_CASE("build_vqa follows the deterministic templates") {
    const Manifest m = tiny_manifest();
    const SplitAssignment split = split_images(m, 1);
    const TaskDataset ds = build_vqa(m, split, 9);

    std::vector<TaskRecord> all;
    for (Split s : kAllSplits) {
        for (const auto& r : ds.of(s)) all.push_back(r);
    }

    SUBCASE("img1 gets abnormality, 3x(presence,counting,position), negative presence") {
        std::vector<TaskRecord> img1;
        for (const auto& r : all) {
            if (r.image_id == "img1") img1.push_back(r);
        }
        REQUIRE(img1.size() == 1 + 2 * 3 + 1);
        CHECK(img1[0].meta->category == "abnormality");
        CHECK(img1[0].suffix == "consolidation, cavitation");
        CHECK(!img1[0].meta->closed);
        // consolidation block
        CHECK(img1[1].meta->category == "presence");
        CHECK(img1[1].suffix == "yes");
        CHECK(img1[2].meta->category == "counting");
        CHECK(img1[2].suffix == "2");
        CHECK(img1[2].meta->closed);
        CHECK(img1[3].meta->category == "position");
        CHECK(!img1[3].meta->closed);
        CHECK(img1[3].suffix.find("zone of the") != std::string::npos);
        // negative presence is last, about the absent pathology
        const TaskRecord& negative = img1.back();
        CHECK(negative.meta->category == "presence");
        CHECK(negative.suffix == "no");
        CHECK(negative.prefix == "Is there nodule in the X-ray image?");
    }

    SUBCASE("normal image gets 'no abnormality' and no counting/position") {
        std::vector<TaskRecord> img0;
        for (const auto& r : all) {
            if (r.image_id == "img0") img0.push_back(r);
        }
        REQUIRE(img0.size() == 2);  // abnormality + negative presence
        CHECK(img0[0].meta->category == "abnormality");
        CHECK(img0[0].suffix == "no abnormality");
        CHECK(img0[1].meta->category == "presence");
        CHECK(img0[1].suffix == "no");
    }

    SUBCASE("closed answers are yes/no or digits, open answers nonempty") {
        for (const auto& r : all) {
            REQUIRE(r.meta.has_value());
            if (r.meta->closed) {
                const bool yes_no = r.suffix == "yes" || r.suffix == "no";
                const bool digits =
                    !r.suffix.empty() &&
                    r.suffix.find_first_not_of("0123456789") == std::string::npos;
                REQUIRE((yes_no || digits));
            } else {
                REQUIRE(!r.suffix.empty());
            }
        }
    }

    SUBCASE("empty vocabulary is an error") {
        Manifest bare = tiny_manifest();
        bare.vocabulary.clear();
        bare.annotations.clear();
        CHECK_THROWS_AS(build_vqa(bare, split, 1), std::invalid_argument);
    }
}

TEST_CASE("no image id crosses splits in any task dataset") {
    const Manifest m = make_synthetic_manifest(60, 3);
    const SplitAssignment split = split_images(m, 17);
    const auto datasets = build_all(m, split, 23);
    std::array<std::set<std::string>, 3> ids_by_split;
    for (const auto& ds : datasets) {
        for (Split s : kAllSplits) {
            for (const auto& r : ds.of(s)) {
                ids_by_split[static_cast<std::size_t>(s)].insert(r.image_id);
            }
        }
    }
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = a + 1; b < 3; ++b) {
            for (const auto& id : ids_by_split[a]) {
                REQUIRE(ids_by_split[b].count(id) == 0);
            }
        }
    }
}

TEST_CASE("builders are deterministic given (manifest, seed)") {
    const Manifest m = make_synthetic_manifest(40, 5);
    const SplitAssignment split = split_images(m, 2);
    const auto first = build_all(m, split, 11);
    const auto second = build_all(m, split, 11);
    REQUIRE(first.size() == second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        for (Split s : kAllSplits) {
            const auto& a = first[i].of(s);
            const auto& b = second[i].of(s);
            REQUIRE(a.size() == b.size());
            for (std::size_t k = 0; k < a.size(); ++k) {
                REQUIRE(record_to_json(a[k]) == record_to_json(b[k]));
            }
        }
    }
}

TEST_CASE("task records survive the JSONL round trip") {
    TaskRecord record;
    record.task = Task::vqa;
    record.image_id = "img7";
    record.prefix = "Is there nodule in the X-ray image?";
    record.suffix = "no";
    record.meta = VqaMeta{"presence", true};
    const TaskRecord round = record_from_json(record_to_json(record));
    CHECK(round.task == record.task);
    CHECK(round.image_id == record.image_id);
    CHECK(round.prefix == record.prefix);
    CHECK(round.suffix == record.suffix);
    REQUIRE(round.meta.has_value());
    CHECK(round.meta->category == "presence");
    CHECK(round.meta->closed);

    TaskRecord plain;
    plain.task = Task::report;
    plain.image_id = "img1";
    plain.prefix = "p";
    plain.suffix = "s";
    const TaskRecord plain_round = record_from_json(record_to_json(plain));
    CHECK(!plain_round.meta.has_value());
}
