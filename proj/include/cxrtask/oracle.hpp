#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cxrtask/dataset_builder.hpp"
#include "cxrtask/manifest.hpp"
#include "cxrtask/output_parser.hpp"

namespace cxrtask {

enum class OracleMode { perfect, corrupted };

std::string to_string(OracleMode mode);

/// Stand-in for the generative model: perfect mode replays the record
/// suffix verbatim; corrupted mode applies seeded, per-instance
/// transformations so metric sensitivity can be exercised without a model.
struct OracleConfig {
    OracleMode mode = OracleMode::perfect;
    double drop_prob = 0.0;      // drop instances (det/seg) or the whole answer
    int jitter_bins = 0;         // +- perturbation of loc token indices
    double garble_prob = 0.0;    // replace a det/seg segment with malformed text
    double answer_flip_prob = 0.0;  // flip diagnosis and closed VQA answers
    std::uint64_t seed = 0;

    void validate() const;  // throws std::invalid_argument on out-of-range knobs
};

/// Corruption draws are seeded from (seed, record content, instance index),
/// so outputs do not depend on iteration order. Increasing drop_prob with
/// the same seed only grows the dropped set.
std::string oracle_predict(const TaskRecord& record, const Manifest& manifest,
                           const OracleConfig& config);

/// Convenience: one prediction row per record, in order.
std::vector<Prediction> oracle_predict_all(const std::vector<TaskRecord>& records,
                                           const Manifest& manifest, const OracleConfig& config);

}  // namespace cxrtask
