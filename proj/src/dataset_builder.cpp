#include "cxrtask/dataset_builder.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "cxrtask/apportion.hpp"
#include "cxrtask/random.hpp"
#include "cxrtask/token_codec.hpp"

namespace cxrtask {

using nlohmann::ordered_json;

std::string to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    throw std::logic_error("unreachable split");
}

std::optional<Split> split_from_string(const std::string& text) {
    for (Split s : kAllSplits) {
        if (to_string(s) == text) return s;
    }
    return std::nullopt;
}

Split SplitAssignment::split_of(const std::string& image_id) const {
    for (Split s : kAllSplits) {
        const auto& list = of(s);
        if (std::find(list.begin(), list.end(), image_id) != list.end()) return s;
    }
    throw std::invalid_argument("image id '" + image_id + "' not in split assignment");
}

SplitAssignment split_images(const Manifest& manifest, std::uint64_t seed) {
    if (manifest.images.size() < 10) {
        throw std::invalid_argument("split_images: need at least 10 images to populate all splits");
    }
    std::vector<std::string> ids;
    ids.reserve(manifest.images.size());
    for (const auto& img : manifest.images) ids.push_back(img.image_id);

    Rng rng(seed);
    rng.shuffle(ids);

    const auto counts = apportion_largest_remainder(
        static_cast<std::int64_t>(ids.size()), {8, 1, 1});

    SplitAssignment assignment;
    assignment.seed = seed;
    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s) {
        auto& bucket = assignment.ids[s];
        bucket.assign(ids.begin() + pos, ids.begin() + pos + counts[s]);
        pos += counts[s];
    }
    return assignment;
}

std::string split_to_json(const SplitAssignment& assignment) {
    ordered_json j;
    j["seed"] = assignment.seed;
    for (Split s : kAllSplits) j[to_string(s)] = assignment.of(s);
    return j.dump(2) + "\n";
}

SplitAssignment split_from_json(const std::string& text) {
    ordered_json j = ordered_json::parse(text);
    SplitAssignment assignment;
    assignment.seed = j.at("seed").get<std::uint64_t>();
    for (Split s : kAllSplits) {
        for (const auto& id : j.at(to_string(s))) {
            assignment.ids[static_cast<std::size_t>(s)].push_back(id.get<std::string>());
        }
    }
    return assignment;
}

SplitAssignment load_split(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open split file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return split_from_json(buf.str());
}

void save_split(const SplitAssignment& assignment, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write split file: " + path);
    out << split_to_json(assignment);
}

std::size_t TaskDataset::total() const {
    std::size_t n = 0;
    for (const auto& records : by_split) n += records.size();
    return n;
}

ZoneSide locate_zone(const BBox& box, const ImageInfo& image) {
    const double y = box.centroid_y() / image.height;
    const double x = box.centroid_x() / image.width;
    ZoneSide out;
    out.zone = y < 1.0 / 3.0 ? "upper" : (y < 2.0 / 3.0 ? "middle" : "lower");
    out.side = x < 0.5 ? "right" : "left";  // radiographic convention
    return out;
}

std::string compose_report(const ImageInfo& image, const std::vector<AnnotatedFinding>& findings) {
    std::string body;
    if (image.diagnosis == DiagnosisLabel::normal || findings.empty()) {
        body = "no findings.";
    } else {
        for (std::size_t i = 0; i < findings.size(); ++i) {
            const ZoneSide zs = locate_zone(findings[i].box, image);
            if (i > 0) body += ' ';
            body += "There is " + findings[i].pathology + " in the " + zs.zone + " zone of the " +
                    zs.side + " lung.";
        }
    }
    return "Findings: " + body + " Impression: " + to_string(image.diagnosis) + ".";
}

namespace {

struct ImageAnnotations {
    std::vector<std::string> pathologies;  // per annotation, in order
    std::vector<BBox> boxes;
    std::vector<BinaryMask> masks;  // filled only when keep_masks
};

ImageAnnotations gather_annotations(const Manifest& manifest, const ImageInfo& image,
                                    bool keep_masks) {
    ImageAnnotations out;
    for (const auto& ann : manifest.annotations) {
        if (ann.image_id != image.image_id) continue;
        BinaryMask mask = rasterize(ann.geometry, image.width, image.height);
        out.pathologies.push_back(ann.pathology);
        out.boxes.push_back(mask_to_bbox(mask));
        if (keep_masks) out.masks.push_back(std::move(mask));
    }
    return out;
}

std::vector<std::string> distinct_in_order(const std::vector<std::string>& labels) {
    std::vector<std::string> out;
    for (const auto& l : labels) {
        if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, const std::string& separator) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += separator;
        out += parts[i];
    }
    return out;
}

template <typename PerImage>
TaskDataset build_per_image(Task task, const Manifest& manifest, const SplitAssignment& split,
                            PerImage&& per_image) {
    std::unordered_map<std::string, Split> split_index;
    for (Split s : kAllSplits) {
        for (const auto& id : split.of(s)) split_index.emplace(id, s);
    }
    TaskDataset dataset;
    dataset.task = task;
    for (const auto& image : manifest.images) {
        const auto it = split_index.find(image.image_id);
        if (it == split_index.end()) {
            throw std::invalid_argument("image id '" + image.image_id +
                                        "' missing from split assignment");
        }
        auto& bucket = dataset.by_split[static_cast<std::size_t>(it->second)];
        per_image(image, bucket);
    }
    return dataset;
}

}  // namespace

TaskDataset build_diagnosis(const Manifest& manifest, const SplitAssignment& split) {
    return build_per_image(Task::diagnosis, manifest, split,
                           [](const ImageInfo& image, std::vector<TaskRecord>& out) {
                               out.push_back({Task::diagnosis, image.image_id, kDiagnosisPrompt,
                                              to_string(image.diagnosis), std::nullopt});
                           });
}

TaskDataset build_report(const Manifest& manifest, const SplitAssignment& split) {
    return build_per_image(
        Task::report, manifest, split,
        [&manifest](const ImageInfo& image, std::vector<TaskRecord>& out) {
            const auto anns = gather_annotations(manifest, image, /*keep_masks=*/false);
            std::vector<AnnotatedFinding> findings;
            for (std::size_t i = 0; i < anns.pathologies.size(); ++i) {
                findings.push_back({anns.pathologies[i], anns.boxes[i]});
            }
            out.push_back({Task::report, image.image_id, kReportPrompt,
                           compose_report(image, findings), std::nullopt});
        });
}

TaskDataset build_vqa(const Manifest& manifest, const SplitAssignment& split, std::uint64_t seed) {
    if (manifest.vocabulary.empty()) {
        throw std::invalid_argument("build_vqa: empty pathology vocabulary");
    }
    return build_per_image(
        Task::vqa, manifest, split,
        [&manifest, seed](const ImageInfo& image, std::vector<TaskRecord>& out) {
            const auto anns = gather_annotations(manifest, image, /*keep_masks=*/false);
            const auto present = distinct_in_order(anns.pathologies);

            auto push = [&](const std::string& question, const std::string& answer,
                            const std::string& category, bool closed) {
                out.push_back({Task::vqa, image.image_id, question, answer,
                               VqaMeta{category, closed}});
            };

            // abnormality (open)
            push("What abnormalities are present in the X-ray image?",
                 present.empty() ? "no abnormality" : join(present, ", "), "abnormality", false);

            // per present pathology: presence / counting / position
            for (const auto& pathology : present) {
                push("Is there " + pathology + " in the X-ray image?", "yes", "presence", true);

                std::size_t count = 0;
                std::size_t first = anns.pathologies.size();
                for (std::size_t i = 0; i < anns.pathologies.size(); ++i) {
                    if (anns.pathologies[i] == pathology) {
                        ++count;
                        first = std::min(first, i);
                    }
                }
                push("How many instances of " + pathology + " are in the X-ray image?",
                     std::to_string(count), "counting", true);

                const ZoneSide zs = locate_zone(anns.boxes[first], image);
                push("Where is the " + pathology + " located?",
                     zs.zone + " zone of the " + zs.side + " lung", "position", false);
            }

            // one negative presence question for a seed-chosen absent pathology
            std::vector<std::string> absent;
            for (const auto& pathology : manifest.vocabulary) {
                if (std::find(present.begin(), present.end(), pathology) == present.end()) {
                    absent.push_back(pathology);
                }
            }
            if (!absent.empty()) {
                Rng rng(hash64(image.image_id, seed));
                const auto& pathology = absent[rng.below(absent.size())];
                push("Is there " + pathology + " in the X-ray image?", "no", "presence", true);
            }
        });
}

TaskDataset build_detection(const Manifest& manifest, const SplitAssignment& split) {
    return build_per_image(
        Task::detection, manifest, split,
        [&manifest](const ImageInfo& image, std::vector<TaskRecord>& out) {
            const auto anns = gather_annotations(manifest, image, /*keep_masks=*/false);
            if (anns.pathologies.empty()) return;  // annotation-free images yield no record
            std::vector<DetectionInstance> instances;
            for (std::size_t i = 0; i < anns.pathologies.size(); ++i) {
                instances.push_back({encode_box(anns.boxes[i], image), anns.pathologies[i]});
            }
            const std::string prefix =
                "detect " + join(distinct_in_order(anns.pathologies), " ; ");
            out.push_back({Task::detection, image.image_id, prefix, render_suffix(instances),
                           std::nullopt});
        });
}

TaskDataset build_segmentation(const Manifest& manifest, const SplitAssignment& split) {
    // the segmentation prompt lists the full vocabulary, not just the
    // pathologies present in the image
    const std::string prefix = "segment " + join(manifest.vocabulary, " ; ");
    return build_per_image(
        Task::segmentation, manifest, split,
        [&manifest, &prefix](const ImageInfo& image, std::vector<TaskRecord>& out) {
            const auto anns = gather_annotations(manifest, image, /*keep_masks=*/true);
            if (anns.pathologies.empty()) return;
            std::vector<SegmentationInstance> instances;
            for (std::size_t i = 0; i < anns.pathologies.size(); ++i) {
                instances.push_back(
                    {encode_mask(anns.masks[i], anns.boxes[i], image), anns.pathologies[i]});
            }
            out.push_back({Task::segmentation, image.image_id, prefix, render_suffix(instances),
                           std::nullopt});
        });
}

std::vector<TaskDataset> build_all(const Manifest& manifest, const SplitAssignment& split,
                                   std::uint64_t vqa_seed) {
    std::vector<TaskDataset> out;
    out.push_back(build_diagnosis(manifest, split));
    out.push_back(build_detection(manifest, split));
    out.push_back(build_report(manifest, split));
    out.push_back(build_vqa(manifest, split, vqa_seed));
    out.push_back(build_segmentation(manifest, split));
    return out;
}

std::string record_to_json(const TaskRecord& record) {
    ordered_json j;
    j["task"] = to_string(record.task);
    j["image_id"] = record.image_id;
    j["prefix"] = record.prefix;
    j["suffix"] = record.suffix;
    ordered_json meta = ordered_json::object();
    if (record.meta) {
        meta["category"] = record.meta->category;
        meta["closed"] = record.meta->closed;
    }
    j["meta"] = meta;
    return j.dump();
}

TaskRecord record_from_json(const std::string& line) {
    ordered_json j = ordered_json::parse(line);
    TaskRecord record;
    const std::string task_text = j.at("task").get<std::string>();
    auto task = task_from_string(task_text);
    if (!task) throw std::runtime_error("unknown task '" + task_text + "' in record");
    record.task = *task;
    record.image_id = j.at("image_id").get<std::string>();
    record.prefix = j.at("prefix").get<std::string>();
    record.suffix = j.at("suffix").get<std::string>();
    if (j.contains("meta") && j.at("meta").contains("category")) {
        record.meta = VqaMeta{j.at("meta").at("category").get<std::string>(),
                              j.at("meta").at("closed").get<bool>()};
    }
    return record;
}

void write_records(const std::vector<TaskRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write records file: " + path);
    for (const auto& r : records) out << record_to_json(r) << '\n';
}

std::vector<TaskRecord> read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open records file: " + path);
    std::vector<TaskRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(record_from_json(line));
    }
    return out;
}

}  // namespace cxrtask
