#pragma once

#include <array>
#include <string>
#include <vector>

#include "cxrtask/geometry.hpp"
#include "cxrtask/manifest.hpp"
#include "cxrtask/task.hpp"

namespace cxrtask {

/// Parsed instances keep the raw token indices alongside the decoded
/// geometry so round trips can be compared token-for-token.
struct ParsedDetection {
    std::array<int, 4> loc{};
    BBox box;
    std::string label;
};

struct ParsedSegmentation {
    std::array<int, 4> loc{};
    std::array<int, 16> seg{};
    BBox box;
    BinaryMask mask;  // full image canvas
    std::string label;
};

struct DetectionParse {
    std::vector<ParsedDetection> instances;
    std::vector<std::string> diagnostics;
};

struct SegmentationParse {
    std::vector<ParsedSegmentation> instances;
    std::vector<std::string> diagnostics;
};

/// Total parsers: arbitrary input never fails. Instances come back in
/// emission order; malformed or degenerate segments are dropped and
/// reported through diagnostics (a missed prediction scores as a false
/// negative downstream, so degradation is graceful by design).
DetectionParse parse_detection(const std::string& raw, const ImageInfo& image);
SegmentationParse parse_segmentation(const std::string& raw, const ImageInfo& image);

/// Canonical answer form: lowercase, trimmed, trailing periods/commas
/// stripped, internal whitespace collapsed, and the number words
/// zero..ten mapped to digits. Idempotent and total.
std::string normalize_answer(const std::string& raw);

/// Structured view over one raw model emission for any task.
struct ParsedOutput {
    Task task = Task::diagnosis;
    std::string text;  // diagnosis (normalized), report and vqa (verbatim)
    std::vector<ParsedDetection> detections;
    std::vector<ParsedSegmentation> segmentations;
    std::vector<std::string> diagnostics;
};

ParsedOutput parse_output(Task task, const std::string& raw, const ImageInfo& image);

/// Predictions file row: {"image_id", "task", "output"} per JSONL line.
struct Prediction {
    std::string image_id;
    Task task = Task::diagnosis;
    std::string output;
};

std::vector<Prediction> read_predictions(const std::string& path);
void write_predictions(const std::vector<Prediction>& predictions, const std::string& path);

}  // namespace cxrtask
