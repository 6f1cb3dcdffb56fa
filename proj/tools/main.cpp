#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cxrtask/dataset_builder.hpp"
#include "cxrtask/manifest.hpp"
#include "cxrtask/metrics.hpp"
#include "cxrtask/mixture.hpp"
#include "cxrtask/oracle.hpp"
#include "cxrtask/output_parser.hpp"
#include "cxrtask/pipeline.hpp"
#include "cxrtask/token_codec.hpp"

namespace {

using namespace cxrtask;

struct Dimensions {
    int width = 0;
    int height = 0;
};

Dimensions parse_dimensions(const std::string& text) {
    Dimensions d;
    char x = 0;
    std::istringstream in(text);
    if (!(in >> d.width >> x >> d.height) || x != 'x' || d.width < 1 || d.height < 1) {
        throw CLI::ValidationError("--image", "expected WxH, e.g. 1024x896");
    }
    return d;
}

BBox parse_box(const std::string& text) {
    BBox box;
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream in(text);
    if (!(in >> box.y_min >> c1 >> box.x_min >> c2 >> box.y_max >> c3 >> box.x_max) ||
        c1 != ',' || c2 != ',' || c3 != ',') {
        throw CLI::ValidationError("--box", "expected y0,x0,y1,x1");
    }
    return box;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_text(out_path, text);
    }
}

nlohmann::ordered_json parsed_output_json(const ParsedOutput& parsed) {
    nlohmann::ordered_json j;
    j["task"] = to_string(parsed.task);
    switch (parsed.task) {
        case Task::detection: {
            auto list = nlohmann::ordered_json::array();
            for (const auto& d : parsed.detections) {
                list.push_back({{"label", d.label},
                                {"loc", d.loc},
                                {"box", {d.box.y_min, d.box.x_min, d.box.y_max, d.box.x_max}}});
            }
            j["detections"] = list;
            break;
        }
        case Task::segmentation: {
            auto list = nlohmann::ordered_json::array();
            for (const auto& s : parsed.segmentations) {
                list.push_back({{"label", s.label},
                                {"loc", s.loc},
                                {"seg", s.seg},
                                {"box", {s.box.y_min, s.box.x_min, s.box.y_max, s.box.x_max}},
                                {"mask_pixels", s.mask.count()}});
            }
            j["segmentations"] = list;
            break;
        }
        default:
            j["text"] = parsed.text;
            break;
    }
    j["diagnostics"] = parsed.diagnostics;
    return j;
}

std::map<Task, std::int64_t> sizes_from_spec(const std::string& spec) {
    std::map<Task, std::int64_t> sizes;
    std::istringstream in(spec);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("--sizes expects task=count pairs, got '" + item + "'");
        }
        const auto task = task_from_string(item.substr(0, eq));
        if (!task) throw std::runtime_error("unknown task in --sizes: '" + item + "'");
        sizes[*task] = std::stoll(item.substr(eq + 1));
    }
    if (sizes.empty()) throw std::runtime_error("--sizes is empty");
    return sizes;
}

std::map<Task, std::int64_t> sizes_from_records_dir(const std::string& dir) {
    std::map<Task, std::int64_t> sizes;
    for (Task task : kAllTasks) {
        const std::string path = dir + "/" + to_string(task) + ".train.jsonl";
        std::ifstream in(path);
        if (!in) continue;
        std::int64_t n = 0;
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") != std::string::npos) ++n;
        }
        if (n > 0) sizes[task] = n;
    }
    if (sizes.empty()) {
        throw std::runtime_error("no <task>.train.jsonl files with records under " + dir);
    }
    return sizes;
}

OracleMode mode_from_string(const std::string& text) {
    if (text == "perfect") return OracleMode::perfect;
    if (text == "corrupted") return OracleMode::corrupted;
    throw std::runtime_error("unknown oracle mode '" + text + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-task chest X-ray dataset, token-codec and evaluation toolkit"};
    app.require_subcommand(1);

    // validate
    std::string manifest_path;
    auto* validate_cmd = app.add_subcommand("validate", "check manifest invariants");
    validate_cmd->add_option("manifest", manifest_path, "manifest JSON")->required();

    // split
    std::string split_manifest, split_out;
    std::uint64_t split_seed = 0;
    auto* split_cmd = app.add_subcommand("split", "8:1:1 image-level split");
    split_cmd->add_option("manifest", split_manifest)->required();
    split_cmd->add_option("--seed", split_seed, "shuffle seed");
    split_cmd->add_option("--out", split_out, "output file (default stdout)");

    // build
    std::string build_manifest, build_split_file, build_task = "all", build_out;
    std::uint64_t build_vqa_seed = 1;
    auto* build_cmd = app.add_subcommand("build", "derive task datasets");
    build_cmd->add_option("manifest", build_manifest)->required();
    build_cmd->add_option("--split-file", build_split_file)->required();
    build_cmd->add_option("--task", build_task, "all or one task name");
    build_cmd->add_option("--vqa-seed", build_vqa_seed, "seed for VQA template choices");
    build_cmd->add_option("--out", build_out, "output directory")->required();

    // schedule
    std::string sched_sizes, sched_records, sched_out;
    std::int64_t sched_batches = 0, sched_batch_size = 1, sched_epochs = 1;
    std::uint64_t sched_seed = 0;
    auto* sched_cmd = app.add_subcommand("schedule", "mixture weights and epoch schedule");
    sched_cmd->add_option("--sizes", sched_sizes, "task=count,... (canonical task names)");
    sched_cmd->add_option("--records", sched_records, "records dir with <task>.train.jsonl");
    sched_cmd->add_option("--batches", sched_batches, "batches per epoch")->required();
    sched_cmd->add_option("--batch-size", sched_batch_size, "records per batch");
    sched_cmd->add_option("--epochs", sched_epochs, "epochs to emit");
    sched_cmd->add_option("--seed", sched_seed, "record shuffle seed");
    sched_cmd->add_option("--out", sched_out, "schedule JSONL (default stdout)");

    // encode-box
    std::string enc_image, enc_box;
    auto* enc_cmd = app.add_subcommand("encode-box", "pixel box to location tokens");
    enc_cmd->add_option("--image", enc_image, "image size WxH")->required();
    enc_cmd->add_option("--box", enc_box, "y0,x0,y1,x1 in pixels")->required();

    // decode
    std::string dec_task, dec_line, dec_image = "1000x1000";
    auto* dec_cmd = app.add_subcommand("decode", "parse one raw output line");
    dec_cmd->add_option("--task", dec_task, "task name")->required();
    dec_cmd->add_option("--line", dec_line, "raw model output")->required();
    dec_cmd->add_option("--image", dec_image, "image size WxH (default 1000x1000)");

    // oracle
    std::string oracle_records, oracle_manifest, oracle_mode = "perfect", oracle_out;
    OracleConfig oracle_config;
    auto* oracle_cmd = app.add_subcommand("oracle", "replay records through the oracle");
    oracle_cmd->add_option("records", oracle_records, "records JSONL")->required();
    oracle_cmd->add_option("--manifest", oracle_manifest)->required();
    oracle_cmd->add_option("--mode", oracle_mode, "perfect|corrupted");
    oracle_cmd->add_option("--seed", oracle_config.seed);
    oracle_cmd->add_option("--drop-prob", oracle_config.drop_prob);
    oracle_cmd->add_option("--jitter-bins", oracle_config.jitter_bins);
    oracle_cmd->add_option("--garble-prob", oracle_config.garble_prob);
    oracle_cmd->add_option("--answer-flip-prob", oracle_config.answer_flip_prob);
    oracle_cmd->add_option("--out", oracle_out, "predictions JSONL (default stdout)");

    // eval
    std::string eval_records, eval_predictions, eval_manifest, eval_out;
    auto* eval_cmd = app.add_subcommand("eval", "score predictions against gold records");
    eval_cmd->add_option("--records", eval_records, "gold records JSONL")->required();
    eval_cmd->add_option("--predictions", eval_predictions, "predictions JSONL")->required();
    eval_cmd->add_option("--manifest", eval_manifest, "manifest (image dimensions)")->required();
    eval_cmd->add_option("--out", eval_out, "report JSON (default stdout)");

    // run
    PipelineOptions run_options;
    std::string run_oracle_mode = "perfect";
    auto* run_cmd = app.add_subcommand("run", "end-to-end pipeline");
    run_cmd->add_option("--manifest", run_options.manifest_path)->required();
    run_cmd->add_option("--out-dir", run_options.out_dir)->required();
    run_cmd->add_option("--seed", run_options.seed, "pipeline seed");
    run_cmd->add_option("--oracle-mode", run_oracle_mode, "perfect|corrupted");
    run_cmd->add_option("--oracle-seed", run_options.oracle.seed);
    run_cmd->add_option("--drop-prob", run_options.oracle.drop_prob);
    run_cmd->add_option("--jitter-bins", run_options.oracle.jitter_bins);
    run_cmd->add_option("--garble-prob", run_options.oracle.garble_prob);
    run_cmd->add_option("--answer-flip-prob", run_options.oracle.answer_flip_prob);
    run_cmd->add_option("--batch-size", run_options.batch_size);
    run_cmd->add_option("--batches", run_options.epoch_batches, "batches per epoch (0 = auto)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate_cmd) {
            const Manifest manifest = load_manifest(manifest_path);
            const auto violations = validate_manifest(manifest);
            for (const auto& v : violations) {
                std::cout << (v.image_id.empty() ? std::string("-") : v.image_id) << ": "
                          << v.message << "\n";
            }
            if (!violations.empty()) {
                std::cerr << "[validate] " << violations.size() << " violation(s)\n";
                return 1;
            }
            std::cout << "manifest OK: " << manifest.images.size() << " images, "
                      << manifest.annotations.size() << " annotations\n";
        } else if (*split_cmd) {
            const Manifest manifest = load_manifest(split_manifest);
            const SplitAssignment assignment = split_images(manifest, split_seed);
            emit(split_out, split_to_json(assignment));
        } else if (*build_cmd) {
            const Manifest manifest = load_manifest(build_manifest);
            const SplitAssignment assignment = load_split(build_split_file);
            std::vector<TaskDataset> datasets;
            if (build_task == "all") {
                datasets = build_all(manifest, assignment, build_vqa_seed);
            } else {
                const auto task = task_from_string(build_task);
                if (!task) throw std::runtime_error("unknown task '" + build_task + "'");
                switch (*task) {
                    case Task::diagnosis: datasets.push_back(build_diagnosis(manifest, assignment)); break;
                    case Task::detection: datasets.push_back(build_detection(manifest, assignment)); break;
                    case Task::report: datasets.push_back(build_report(manifest, assignment)); break;
                    case Task::vqa: datasets.push_back(build_vqa(manifest, assignment, build_vqa_seed)); break;
                    case Task::segmentation: datasets.push_back(build_segmentation(manifest, assignment)); break;
                }
            }
            std::filesystem::create_directories(build_out);
            for (const auto& dataset : datasets) {
                for (Split s : kAllSplits) {
                    const std::string path = build_out + "/" + to_string(dataset.task) + "." +
                                             to_string(s) + ".jsonl";
                    write_records(dataset.of(s), path);
                    std::cout << path << ": " << dataset.of(s).size() << " records\n";
                }
            }
        } else if (*sched_cmd) {
            if (sched_sizes.empty() == sched_records.empty()) {
                throw std::runtime_error("give exactly one of --sizes or --records");
            }
            const auto sizes = sched_sizes.empty() ? sizes_from_records_dir(sched_records)
                                                   : sizes_from_spec(sched_sizes);
            const MixtureWeights weights = compute_weights(sizes);
            if (auto ratio = weights.integer_ratio()) {
                std::cerr << "weights (inverse-size ratio): " << *ratio << "\n";
            }
            const MixtureSchedule schedule =
                build_schedule(weights, sched_batch_size, sched_batches, sched_seed, sched_epochs);
            emit(sched_out, schedule_to_jsonl(schedule));
        } else if (*enc_cmd) {
            const Dimensions dims = parse_dimensions(enc_image);
            ImageInfo image;
            image.image_id = "cli";
            image.width = dims.width;
            image.height = dims.height;
            std::cout << encode_box(parse_box(enc_box), image).render() << "\n";
        } else if (*dec_cmd) {
            const auto task = task_from_string(dec_task);
            if (!task) throw std::runtime_error("unknown task '" + dec_task + "'");
            const Dimensions dims = parse_dimensions(dec_image);
            ImageInfo image;
            image.image_id = "cli";
            image.width = dims.width;
            image.height = dims.height;
            std::cout << parsed_output_json(parse_output(*task, dec_line, image)).dump(2) << "\n";
        } else if (*oracle_cmd) {
            oracle_config.mode = mode_from_string(oracle_mode);
            const Manifest manifest = load_manifest(oracle_manifest);
            const auto records = read_records(oracle_records);
            const auto predictions = oracle_predict_all(records, manifest, oracle_config);
            if (oracle_out.empty()) {
                for (const auto& p : predictions) {
                    nlohmann::ordered_json j;
                    j["image_id"] = p.image_id;
                    j["task"] = to_string(p.task);
                    j["output"] = p.output;
                    std::cout << j.dump() << "\n";
                }
            } else {
                write_predictions(predictions, oracle_out);
            }
        } else if (*eval_cmd) {
            const Manifest manifest = load_manifest(eval_manifest);
            const auto gold = read_records(eval_records);
            const auto predictions = read_predictions(eval_predictions);
            const EvalReport report = evaluate_records(manifest, gold, predictions);
            emit(eval_out, eval_report_to_json(report));
        } else if (*run_cmd) {
            run_options.oracle.mode = mode_from_string(run_oracle_mode);
            const EvalReport report = run_pipeline(run_options);
            std::cout << eval_report_to_json(report);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
