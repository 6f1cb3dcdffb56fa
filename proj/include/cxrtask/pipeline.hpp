#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cxrtask/dataset_builder.hpp"
#include "cxrtask/manifest.hpp"
#include "cxrtask/metrics.hpp"
#include "cxrtask/oracle.hpp"
#include "cxrtask/output_parser.hpp"

namespace cxrtask {

struct TextScores {
    std::int64_t pairs = 0;
    double bleu4 = 0.0;
    double meteor = 0.0;
    double rouge_l = 0.0;
};

/// Per-task metric bundle for one evaluation run.
struct EvalReport {
    std::optional<ClassificationResult> diagnosis;
    std::optional<APResult> detection;
    std::optional<APResult> segmentation;
    std::optional<TextScores> report;
    std::optional<VqaEvaluation> vqa;
};

/// Evaluates predictions against gold records. Gold may mix tasks; within
/// each task, predictions align positionally with the gold records of that
/// task (a missing prediction scores as wrong / absent). The manifest
/// supplies image dimensions for token decoding.
EvalReport evaluate_records(const Manifest& manifest, const std::vector<TaskRecord>& gold,
                            const std::vector<Prediction>& predictions);

/// EvalReport JSON: {"task": {metric: value, ...}}, numbers with 6 decimals.
std::string eval_report_to_json(const EvalReport& report);
void save_eval_report(const EvalReport& report, const std::string& path);

struct PipelineOptions {
    std::string manifest_path;
    std::string out_dir;
    std::uint64_t seed = 0;  // split / vqa / schedule seeds derive from this
    OracleConfig oracle;
    std::int64_t batch_size = 16;
    std::int64_t epoch_batches = 0;  // 0 -> ceil(total train records / batch_size)
};

/// Inputs plus every artifact the run produced; serialized as run.json so a
/// run can be audited and replayed.
struct PipelineRun {
    PipelineOptions options;
    std::uint64_t split_seed = 0;
    std::uint64_t vqa_seed = 0;
    std::uint64_t schedule_seed = 0;
    std::vector<std::string> artifacts;  // paths relative to out_dir
};

/// split -> build all five task datasets -> schedule -> oracle on the test
/// split -> parse -> evaluate. Writes records, predictions, schedule,
/// report.json and run.json under out_dir; reruns with identical inputs
/// produce byte-identical trees. Errors carry a [stage] prefix.
EvalReport run_pipeline(const PipelineOptions& options, PipelineRun* run_out = nullptr);

}  // namespace cxrtask
