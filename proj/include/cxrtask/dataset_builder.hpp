#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cxrtask/manifest.hpp"
#include "cxrtask/task.hpp"

namespace cxrtask {

enum class Split { train, validation, test };

inline constexpr std::array<Split, 3> kAllSplits = {Split::train, Split::validation, Split::test};

std::string to_string(Split split);
std::optional<Split> split_from_string(const std::string& text);

/// Image-level split so no image leaks between train/validation/test of any
/// derived task dataset. 8:1:1 by largest-remainder apportionment over a
/// seeded shuffle.
struct SplitAssignment {
    std::uint64_t seed = 0;
    std::array<std::vector<std::string>, 3> ids;  // indexed by Split, shuffled order

    Split split_of(const std::string& image_id) const;
    const std::vector<std::string>& of(Split split) const {
        return ids[static_cast<std::size_t>(split)];
    }
};

/// Throws std::invalid_argument for fewer than 10 images.
SplitAssignment split_images(const Manifest& manifest, std::uint64_t seed);

std::string split_to_json(const SplitAssignment& assignment);
SplitAssignment split_from_json(const std::string& text);
SplitAssignment load_split(const std::string& path);
void save_split(const SplitAssignment& assignment, const std::string& path);

struct VqaMeta {
    std::string category;  // abnormality | presence | position | counting
    bool closed = false;
};

/// One serialized training/eval example. prefix is the prompt half, suffix
/// the target half; the image itself is referenced by id.
struct TaskRecord {
    Task task = Task::diagnosis;
    std::string image_id;
    std::string prefix;
    std::string suffix;
    std::optional<VqaMeta> meta;
};

/// One derived task dataset partitioned by split. Records are ordered by
/// manifest image order within each split (annotation order within images).
struct TaskDataset {
    Task task = Task::diagnosis;
    std::array<std::vector<TaskRecord>, 3> by_split;

    const std::vector<TaskRecord>& of(Split split) const {
        return by_split[static_cast<std::size_t>(split)];
    }
    std::size_t total() const;
};

/// Normative prompt strings.
inline constexpr const char* kDiagnosisPrompt = "What is the diagnosis in the X-ray image?";
inline constexpr const char* kReportPrompt = "Generate a medical report for the X-ray image provided.";

/// Centroid zone: y/H in [0,1/3) upper, [1/3,2/3) middle, else lower.
/// Side is the patient side, so image-left maps to "right".
struct ZoneSide {
    std::string zone;  // upper | middle | lower
    std::string side;  // right | left
};
ZoneSide locate_zone(const BBox& box, const ImageInfo& image);

struct AnnotatedFinding {
    std::string pathology;
    BBox box;
};

/// "Findings: ... Impression: {diagnosis}." One sentence per finding in
/// order; images diagnosed normal (and images without findings) get the
/// findings body "no findings.".
std::string compose_report(const ImageInfo& image, const std::vector<AnnotatedFinding>& findings);

TaskDataset build_diagnosis(const Manifest& manifest, const SplitAssignment& split);
TaskDataset build_report(const Manifest& manifest, const SplitAssignment& split);
TaskDataset build_vqa(const Manifest& manifest, const SplitAssignment& split, std::uint64_t seed);
TaskDataset build_detection(const Manifest& manifest, const SplitAssignment& split);
TaskDataset build_segmentation(const Manifest& manifest, const SplitAssignment& split);

/// All five, in canonical task order.
std::vector<TaskDataset> build_all(const Manifest& manifest, const SplitAssignment& split,
                                   std::uint64_t vqa_seed);

/// Records file: JSONL of {"task","image_id","prefix","suffix","meta"{...}}.
std::string record_to_json(const TaskRecord& record);
TaskRecord record_from_json(const std::string& line);
void write_records(const std::vector<TaskRecord>& records, const std::string& path);
std::vector<TaskRecord> read_records(const std::string& path);

}  // namespace cxrtask
