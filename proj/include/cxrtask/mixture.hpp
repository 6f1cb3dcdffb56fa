#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cxrtask/task.hpp"

namespace cxrtask {

/// Inverse-size task weights in exact rational arithmetic, normalized so
/// the largest dataset carries weight 1 (every other weight is >= 1,
/// oversampling the smaller tasks).
struct MixtureWeights {
    struct Entry {
        Task task = Task::diagnosis;
        std::int64_t size = 0;
        std::int64_t weight_num = 0;  // reduced fraction weight = num / den
        std::int64_t weight_den = 1;
    };
    std::vector<Entry> entries;  // canonical task order

    /// Present when every weight is integral, e.g. "6:9:6:1:8".
    std::optional<std::string> integer_ratio() const;
};

/// weight_t = max_size / size_t as a reduced fraction. Throws
/// std::invalid_argument on an empty map or a non-positive size.
MixtureWeights compute_weights(const std::map<Task, std::int64_t>& sizes);

/// One batch of record indices for a single task.
struct ScheduleEntry {
    std::int64_t step = 0;
    Task task = Task::diagnosis;
    std::vector<std::int64_t> record_indices;
};

/// Deterministic epoch schedule of homogeneous-task batches. Per-task batch
/// counts follow largest-remainder apportionment of the epoch length over
/// the weights; tasks interleave by error diffusion; records stream from a
/// seeded shuffle that reshuffles on exhaustion.
struct MixtureSchedule {
    std::int64_t batch_size = 1;
    std::int64_t epoch_batches = 0;
    std::int64_t epochs = 1;
    std::uint64_t seed = 0;
    std::vector<Task> tasks;                     // aligned with per_epoch_counts
    std::vector<std::int64_t> per_epoch_counts;  // batches per task per epoch
    std::vector<ScheduleEntry> entries;
};

/// Throws std::invalid_argument when epoch_batches is less than the number
/// of tasks or batch_size < 1.
MixtureSchedule build_schedule(const MixtureWeights& weights, std::int64_t batch_size,
                               std::int64_t epoch_batches, std::uint64_t seed,
                               std::int64_t epochs = 1);

/// Schedule export: JSONL of {"step","task","record_ids":[...]}.
void write_schedule(const MixtureSchedule& schedule, const std::string& path);
std::string schedule_to_jsonl(const MixtureSchedule& schedule);

}  // namespace cxrtask
