#include "cxrtask/mixture.hpp"

#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cxrtask/apportion.hpp"
#include "cxrtask/random.hpp"

namespace cxrtask {

std::optional<std::string> MixtureWeights::integer_ratio() const {
    std::string out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].weight_den != 1) return std::nullopt;
        if (i > 0) out += ':';
        out += std::to_string(entries[i].weight_num);
    }
    return out;
}

MixtureWeights compute_weights(const std::map<Task, std::int64_t>& sizes) {
    if (sizes.empty()) {
        throw std::invalid_argument("compute_weights: no task sizes given");
    }
    std::int64_t max_size = 0;
    for (const auto& [task, size] : sizes) {
        if (size < 1) {
            throw std::invalid_argument("compute_weights: size of task '" + to_string(task) +
                                        "' must be >= 1");
        }
        max_size = std::max(max_size, size);
    }
    MixtureWeights out;
    for (const auto& [task, size] : sizes) {
        const std::int64_t g = std::gcd(max_size, size);
        out.entries.push_back({task, size, max_size / g, size / g});
    }
    return out;
}

namespace {

// inverse-size shares with an exact common denominator: share_t = prod / size_t
std::vector<unsigned __int128> inverse_size_shares(const MixtureWeights& weights) {
    for (const auto& e : weights.entries) {
        if (e.size > 10'000'000) {
            throw std::invalid_argument("build_schedule: task sizes above 1e7 are not supported");
        }
    }
    std::vector<unsigned __int128> shares(weights.entries.size(), 1);
    for (std::size_t t = 0; t < weights.entries.size(); ++t) {
        for (std::size_t s = 0; s < weights.entries.size(); ++s) {
            if (s != t) shares[t] *= static_cast<unsigned __int128>(weights.entries[s].size);
        }
    }
    return shares;
}

/// Seeded shuffled index stream over [0, size); reshuffles on exhaustion so
/// long schedules keep covering every record.
class RecordStream {
public:
    RecordStream(std::int64_t size, std::uint64_t seed) : rng_(seed) {
        order_.resize(static_cast<std::size_t>(size));
        std::iota(order_.begin(), order_.end(), 0);
        rng_.shuffle(order_);
    }

    std::int64_t next() {
        if (pos_ == order_.size()) {
            rng_.shuffle(order_);
            pos_ = 0;
        }
        return order_[pos_++];
    }

private:
    Rng rng_;
    std::vector<std::int64_t> order_;
    std::size_t pos_ = 0;
};

}  // namespace

MixtureSchedule build_schedule(const MixtureWeights& weights, std::int64_t batch_size,
                               std::int64_t epoch_batches, std::uint64_t seed,
                               std::int64_t epochs) {
    const std::size_t n_tasks = weights.entries.size();
    if (n_tasks == 0) throw std::invalid_argument("build_schedule: no tasks");
    if (batch_size < 1) throw std::invalid_argument("build_schedule: batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("build_schedule: epochs must be >= 1");
    if (epoch_batches < static_cast<std::int64_t>(n_tasks)) {
        throw std::invalid_argument(
            "build_schedule: epoch_batches must be at least the number of tasks");
    }

    const auto shares = inverse_size_shares(weights);
    const auto counts = apportion_largest_remainder(epoch_batches, shares);

    MixtureSchedule schedule;
    schedule.batch_size = batch_size;
    schedule.epoch_batches = epoch_batches;
    schedule.epochs = epochs;
    schedule.seed = seed;
    for (const auto& e : weights.entries) schedule.tasks.push_back(e.task);
    schedule.per_epoch_counts = counts;

    std::vector<RecordStream> streams;
    for (std::size_t t = 0; t < n_tasks; ++t) {
        streams.emplace_back(weights.entries[t].size,
                             hash64(to_string(weights.entries[t].task), seed));
    }

    // error-diffusion interleave: every step each task accrues credit
    // proportional to its batch count; the largest credit (ties -> first
    // task in canonical order) emits next
    std::int64_t step = 0;
    for (std::int64_t epoch = 0; epoch < epochs; ++epoch) {
        std::vector<std::int64_t> credit(n_tasks, 0);
        std::vector<std::int64_t> remaining = counts;
        for (std::int64_t b = 0; b < epoch_batches; ++b) {
            std::size_t chosen = n_tasks;
            for (std::size_t t = 0; t < n_tasks; ++t) {
                credit[t] += counts[t];
                if (remaining[t] > 0 && (chosen == n_tasks || credit[t] > credit[chosen])) {
                    chosen = t;
                }
            }
            credit[chosen] -= epoch_batches;
            --remaining[chosen];

            ScheduleEntry entry;
            entry.step = step++;
            entry.task = weights.entries[chosen].task;
            entry.record_indices.reserve(static_cast<std::size_t>(batch_size));
            for (std::int64_t k = 0; k < batch_size; ++k) {
                entry.record_indices.push_back(streams[chosen].next());
            }
            schedule.entries.push_back(std::move(entry));
        }
    }
    return schedule;
}

std::string schedule_to_jsonl(const MixtureSchedule& schedule) {
    std::ostringstream out;
    for (const auto& entry : schedule.entries) {
        nlohmann::ordered_json j;
        j["step"] = entry.step;
        j["task"] = to_string(entry.task);
        j["record_ids"] = entry.record_indices;
        out << j.dump() << '\n';
    }
    return out.str();
}

void write_schedule(const MixtureSchedule& schedule, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write schedule file: " + path);
    out << schedule_to_jsonl(schedule);
}

}  // namespace cxrtask
