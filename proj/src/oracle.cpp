#include "cxrtask/oracle.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "cxrtask/random.hpp"
#include "cxrtask/token_codec.hpp"

namespace cxrtask {

std::string to_string(OracleMode mode) {
    return mode == OracleMode::perfect ? "perfect" : "corrupted";
}

void OracleConfig::validate() const {
    auto in_range = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!in_range(drop_prob) || !in_range(garble_prob) || !in_range(answer_flip_prob)) {
        throw std::invalid_argument("oracle: probabilities must lie in [0, 1]");
    }
    if (jitter_bins < 0) {
        throw std::invalid_argument("oracle: jitter_bins must be >= 0");
    }
}

namespace {

std::uint64_t record_seed(const OracleConfig& config, const TaskRecord& record) {
    std::uint64_t h = hash64(to_string(record.task), config.seed);
    h = hash64(record.image_id, h);
    h = hash64(record.prefix, h);
    return hash64(record.suffix, h);
}

int jitter_index(int index, int jitter_bins, Rng& rng) {
    if (jitter_bins == 0) return index;
    const int delta = static_cast<int>(rng.between(-jitter_bins, jitter_bins));
    return std::clamp(index + delta, 0, kLocBins - 1);
}

/// Rebuilds a det/seg suffix with per-instance drop, garble and loc jitter.
/// Instances come from parsing our own canonical suffix, which never fails.
std::string corrupt_instances(const TaskRecord& record, const ImageInfo& image,
                              const OracleConfig& config) {
    std::vector<std::string> segments;
    auto corrupt_one = [&](std::size_t i, const std::array<int, 4>& loc,
                           const std::string& rest) -> void {
        Rng rng(hash_combine(record_seed(config, record), i));
        const double drop_draw = rng.real01();
        const double garble_draw = rng.real01();
        if (drop_draw < config.drop_prob) return;
        if (garble_draw < config.garble_prob) {
            segments.push_back("<loc0xq9> garbled");
            return;
        }
        BoxTokens tokens;
        for (int k = 0; k < 4; ++k) tokens.tokens[k].index = jitter_index(loc[k], config.jitter_bins, rng);
        segments.push_back(tokens.render() + rest);
    };

    if (record.task == Task::detection) {
        const auto parsed = parse_detection(record.suffix, image);
        for (std::size_t i = 0; i < parsed.instances.size(); ++i) {
            corrupt_one(i, parsed.instances[i].loc, " " + parsed.instances[i].label);
        }
    } else {
        const auto parsed = parse_segmentation(record.suffix, image);
        for (std::size_t i = 0; i < parsed.instances.size(); ++i) {
            std::string rest;
            for (int s : parsed.instances[i].seg) rest += SegToken{s}.render();
            rest += " " + parsed.instances[i].label;
            corrupt_one(i, parsed.instances[i].loc, rest);
        }
    }

    std::string out;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i > 0) out += " ; ";
        out += segments[i];
    }
    return out;
}

bool all_digits(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isdigit(c);
    });
}

std::string flip_closed_answer(const std::string& suffix) {
    if (suffix == "yes") return "no";
    if (suffix == "no") return "yes";
    if (all_digits(suffix)) return std::to_string(std::stoll(suffix) + 1);
    return suffix + " (wrong)";
}

std::string flip_diagnosis(const std::string& suffix) {
    const auto label = diagnosis_from_string(suffix);
    if (!label) return suffix + " (wrong)";
    const int next = (static_cast<int>(*label) + 1) % 4;
    return to_string(static_cast<DiagnosisLabel>(next));
}

}  // namespace

std::string oracle_predict(const TaskRecord& record, const Manifest& manifest,
                           const OracleConfig& config) {
    config.validate();
    if (config.mode == OracleMode::perfect) return record.suffix;

    const ImageInfo* image = manifest.find_image(record.image_id);
    if (!image) {
        throw std::invalid_argument("oracle: record image '" + record.image_id +
                                    "' not in manifest");
    }

    if (record.task == Task::detection || record.task == Task::segmentation) {
        return corrupt_instances(record, *image, config);
    }

    Rng rng(record_seed(config, record));
    const double drop_draw = rng.real01();
    const double flip_draw = rng.real01();
    if (drop_draw < config.drop_prob) return "";

    if (record.task == Task::diagnosis && flip_draw < config.answer_flip_prob) {
        return flip_diagnosis(record.suffix);
    }
    if (record.task == Task::vqa && record.meta && record.meta->closed &&
        flip_draw < config.answer_flip_prob) {
        return flip_closed_answer(record.suffix);
    }
    return record.suffix;
}

std::vector<Prediction> oracle_predict_all(const std::vector<TaskRecord>& records,
                                           const Manifest& manifest, const OracleConfig& config) {
    std::vector<Prediction> out;
    out.reserve(records.size());
    for (const auto& record : records) {
        out.push_back({record.image_id, record.task, oracle_predict(record, manifest, config)});
    }
    return out;
}

}  // namespace cxrtask
