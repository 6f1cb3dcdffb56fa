#include "cxrtask/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "cxrtask/mixture.hpp"
#include "cxrtask/random.hpp"

namespace cxrtask {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::vector<const TaskRecord*> gold_of_task(const std::vector<TaskRecord>& gold, Task task) {
    std::vector<const TaskRecord*> out;
    for (const auto& r : gold) {
        if (r.task == task) out.push_back(&r);
    }
    return out;
}

std::vector<std::string> outputs_of_task(const std::vector<Prediction>& predictions, Task task) {
    std::vector<std::string> out;
    for (const auto& p : predictions) {
        if (p.task == task) out.push_back(p.output);
    }
    return out;
}

const ImageInfo& image_of(const Manifest& manifest, const std::string& image_id) {
    const ImageInfo* image = manifest.find_image(image_id);
    if (!image) {
        throw std::invalid_argument("evaluate: image '" + image_id + "' not in manifest");
    }
    return *image;
}

std::string output_for(const std::vector<std::string>& outputs, std::size_t i) {
    return i < outputs.size() ? outputs[i] : std::string();
}

}  // namespace

EvalReport evaluate_records(const Manifest& manifest, const std::vector<TaskRecord>& gold,
                            const std::vector<Prediction>& predictions) {
    EvalReport report;

    // diagnosis: classification over normalized label strings
    if (auto records = gold_of_task(gold, Task::diagnosis); !records.empty()) {
        const auto outputs = outputs_of_task(predictions, Task::diagnosis);
        std::vector<std::pair<std::string, std::string>> pairs;
        for (std::size_t i = 0; i < records.size(); ++i) {
            pairs.emplace_back(normalize_answer(records[i]->suffix),
                               normalize_answer(output_for(outputs, i)));
        }
        std::vector<std::string> label_set;
        for (int d = 0; d < 4; ++d) {
            label_set.push_back(normalize_answer(to_string(static_cast<DiagnosisLabel>(d))));
        }
        report.diagnosis = classification_metrics(pairs, label_set);
    }

    // detection: box mAP, gold parsed from suffixes, rank = emission order
    if (auto records = gold_of_task(gold, Task::detection); !records.empty()) {
        const auto outputs = outputs_of_task(predictions, Task::detection);
        std::vector<ImageInstances<BoxInstance>> images;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const ImageInfo& image = image_of(manifest, records[i]->image_id);
            ImageInstances<BoxInstance> entry;
            entry.image_id = image.image_id;
            for (const auto& g : parse_detection(records[i]->suffix, image).instances) {
                entry.gold.push_back({g.box, g.label});
            }
            for (const auto& p : parse_detection(output_for(outputs, i), image).instances) {
                entry.predicted.push_back({p.box, p.label});
            }
            images.push_back(std::move(entry));
        }
        report.detection = map_at_50(images);
    }

    // segmentation: mask mAP on full-canvas masks
    if (auto records = gold_of_task(gold, Task::segmentation); !records.empty()) {
        const auto outputs = outputs_of_task(predictions, Task::segmentation);
        std::vector<ImageInstances<MaskInstance>> images;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const ImageInfo& image = image_of(manifest, records[i]->image_id);
            ImageInstances<MaskInstance> entry;
            entry.image_id = image.image_id;
            for (auto& g : parse_segmentation(records[i]->suffix, image).instances) {
                entry.gold.push_back({std::move(g.mask), g.label});
            }
            for (auto& p : parse_segmentation(output_for(outputs, i), image).instances) {
                entry.predicted.push_back({std::move(p.mask), p.label});
            }
            images.push_back(std::move(entry));
        }
        report.segmentation = map_at_50(images);
    }

    // report generation: corpus text metrics
    if (auto records = gold_of_task(gold, Task::report); !records.empty()) {
        const auto outputs = outputs_of_task(predictions, Task::report);
        std::vector<std::string> refs, hyps;
        for (std::size_t i = 0; i < records.size(); ++i) {
            refs.push_back(records[i]->suffix);
            hyps.push_back(output_for(outputs, i));
        }
        TextScores scores;
        scores.pairs = static_cast<std::int64_t>(refs.size());
        scores.bleu4 = bleu4(refs, hyps);
        scores.meteor = meteor_lite(refs, hyps);
        scores.rouge_l = rouge_l(refs, hyps);
        report.report = scores;
    }

    // vqa
    if (auto records = gold_of_task(gold, Task::vqa); !records.empty()) {
        const auto outputs = outputs_of_task(predictions, Task::vqa);
        std::vector<TaskRecord> owned;
        for (const auto* r : records) owned.push_back(*r);
        report.vqa = evaluate_vqa(owned, outputs);
    }

    return report;
}

namespace {

/// Hand-rolled emitter: the report interface pins numbers to 6 decimal
/// places, which json dumpers do not guarantee.
class ReportWriter {
public:
    std::string str() && { return std::move(out_); }

    void open(const std::string& key) { key_line(key) += "{"; ++depth_; first_ = true; }
    void close() {
        --depth_;
        out_ += "\n" + indent() + "}";
        first_ = false;
    }
    void number(const std::string& key, double value) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.6f", value);
        key_line(key) += buf;
    }
    void integer(const std::string& key, std::int64_t value) {
        key_line(key) += std::to_string(value);
    }

private:
    std::string indent() const { return std::string(2 * depth_, ' '); }
    std::string& key_line(const std::string& key) {
        if (!first_) out_ += ",";
        out_ += "\n" + indent() + ordered_json(key).dump() + ": ";
        first_ = false;
        return out_;
    }

    std::string out_ = "{";
    int depth_ = 1;
    bool first_ = true;
};

void write_ap_section(ReportWriter& w, const std::string& name, const APResult& r) {
    w.open(name);
    w.number("map", r.mean_ap);
    w.open("per_class");
    for (const auto& [label, entry] : r.per_class) {
        w.open(label);
        w.number("ap", entry.ap);
        w.integer("gold", entry.gold);
        w.close();
    }
    w.close();
    w.close();
}

}  // namespace

std::string eval_report_to_json(const EvalReport& report) {
    ReportWriter w;
    if (report.diagnosis) {
        const auto& r = *report.diagnosis;
        w.open("diagnosis");
        w.number("accuracy", r.accuracy);
        w.number("macro_recall", r.macro_recall);
        w.number("macro_precision", r.macro_precision);
        w.open("per_class");
        for (const auto& [label, pc] : r.per_class) {
            w.open(label);
            w.integer("gold", pc.gold);
            w.integer("predicted", pc.predicted);
            w.integer("correct", pc.correct);
            w.number("precision", pc.precision);
            w.number("recall", pc.recall);
            w.close();
        }
        w.close();
        w.close();
    }
    if (report.detection) write_ap_section(w, "detection", *report.detection);
    if (report.segmentation) write_ap_section(w, "segmentation", *report.segmentation);
    if (report.report) {
        w.open("report");
        w.integer("pairs", report.report->pairs);
        w.number("bleu4", report.report->bleu4);
        w.number("meteor", report.report->meteor);
        w.number("rouge_l", report.report->rouge_l);
        w.close();
    }
    if (report.vqa) {
        const auto& v = *report.vqa;
        w.open("vqa");
        w.integer("closed_total", v.closed_total);
        w.integer("closed_correct", v.closed_correct);
        w.number("closed_accuracy", v.closed_accuracy);
        w.open("per_category");
        for (const auto& [category, counts] : v.per_category) {
            w.open(category);
            w.integer("correct", counts.first);
            w.integer("total", counts.second);
            w.number("accuracy",
                     counts.second > 0 ? static_cast<double>(counts.first) / counts.second : 0.0);
            w.close();
        }
        w.close();
        w.integer("open_total", v.open_total);
        w.number("open_bleu4", v.open_bleu4);
        w.number("open_meteor", v.open_meteor);
        w.number("open_rouge_l", v.open_rouge_l);
        w.close();
    }
    std::string out = std::move(w).str();
    out += "\n}\n";
    return out;
}

void save_eval_report(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report file: " + path);
    out << eval_report_to_json(report);
}

namespace {

[[noreturn]] void stage_error(const char* stage, const std::exception& e) {
    throw std::runtime_error(std::string("[") + stage + "] " + e.what());
}

}  // namespace

EvalReport run_pipeline(const PipelineOptions& options, PipelineRun* run_out) {
    options.oracle.validate();

    PipelineRun run;
    run.options = options;
    run.split_seed = options.seed;
    run.vqa_seed = hash_combine(options.seed, 1);
    run.schedule_seed = hash_combine(options.seed, 2);

    const fs::path out_dir(options.out_dir);
    fs::create_directories(out_dir / "records");
    auto artifact = [&](const fs::path& relative) {
        run.artifacts.push_back(relative.generic_string());
        return (out_dir / relative).string();
    };

    Manifest manifest;
    try {
        manifest = load_manifest(options.manifest_path);
        const auto violations = validate_manifest(manifest);
        if (!violations.empty()) {
            throw std::runtime_error("manifest has " + std::to_string(violations.size()) +
                                     " violation(s); first: " + violations.front().image_id +
                                     ": " + violations.front().message);
        }
    } catch (const std::exception& e) {
        stage_error("manifest", e);
    }

    SplitAssignment split;
    try {
        split = split_images(manifest, run.split_seed);
        save_split(split, artifact("split.json"));
    } catch (const std::exception& e) {
        stage_error("split", e);
    }

    std::vector<TaskDataset> datasets;
    try {
        datasets = build_all(manifest, split, run.vqa_seed);
        for (const auto& dataset : datasets) {
            for (Split s : kAllSplits) {
                const fs::path rel =
                    fs::path("records") / (to_string(dataset.task) + "." + to_string(s) + ".jsonl");
                write_records(dataset.of(s), artifact(rel));
            }
        }
    } catch (const std::exception& e) {
        stage_error("build", e);
    }

    try {
        std::map<Task, std::int64_t> train_sizes;
        std::int64_t total_train = 0;
        for (const auto& dataset : datasets) {
            const auto n = static_cast<std::int64_t>(dataset.of(Split::train).size());
            if (n > 0) {
                train_sizes[dataset.task] = n;
                total_train += n;
            }
        }
        if (!train_sizes.empty()) {
            const MixtureWeights weights = compute_weights(train_sizes);
            std::int64_t batches = options.epoch_batches;
            if (batches <= 0) {
                batches = std::max<std::int64_t>(
                    static_cast<std::int64_t>(train_sizes.size()),
                    (total_train + options.batch_size - 1) / options.batch_size);
            }
            const MixtureSchedule schedule =
                build_schedule(weights, options.batch_size, batches, run.schedule_seed);
            write_schedule(schedule, artifact("schedule.jsonl"));
        }
    } catch (const std::exception& e) {
        stage_error("schedule", e);
    }

    std::vector<TaskRecord> test_gold;
    std::vector<Prediction> predictions;
    try {
        for (const auto& dataset : datasets) {
            const auto& records = dataset.of(Split::test);
            test_gold.insert(test_gold.end(), records.begin(), records.end());
        }
        predictions = oracle_predict_all(test_gold, manifest, options.oracle);
        write_predictions(predictions, artifact("predictions.jsonl"));
    } catch (const std::exception& e) {
        stage_error("oracle", e);
    }

    EvalReport report;
    try {
        report = evaluate_records(manifest, test_gold, predictions);
        save_eval_report(report, artifact("report.json"));
    } catch (const std::exception& e) {
        stage_error("eval", e);
    }

    try {
        ordered_json j;
        j["manifest"] = options.manifest_path;
        j["out_dir"] = options.out_dir;
        j["seed"] = options.seed;
        j["split_seed"] = run.split_seed;
        j["vqa_seed"] = run.vqa_seed;
        j["schedule_seed"] = run.schedule_seed;
        j["batch_size"] = options.batch_size;
        j["epoch_batches"] = options.epoch_batches;
        ordered_json oracle;
        oracle["mode"] = to_string(options.oracle.mode);
        oracle["drop_prob"] = options.oracle.drop_prob;
        oracle["jitter_bins"] = options.oracle.jitter_bins;
        oracle["garble_prob"] = options.oracle.garble_prob;
        oracle["answer_flip_prob"] = options.oracle.answer_flip_prob;
        oracle["seed"] = options.oracle.seed;
        j["oracle"] = oracle;
        run.artifacts.push_back("run.json");
        j["artifacts"] = run.artifacts;
        std::ofstream out(out_dir / "run.json");
        if (!out) throw std::runtime_error("cannot write run.json");
        out << j.dump(2) << "\n";
    } catch (const std::exception& e) {
        stage_error("run-record", e);
    }

    if (run_out) *run_out = run;
    return report;
}

}  // namespace cxrtask
