#include "cxrtask/output_parser.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "cxrtask/token_codec.hpp"

namespace cxrtask {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_segments(const std::string& raw) {
    std::vector<std::string> out;
    std::string current;
    for (char c : raw) {
        if (c == ';') {
            out.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    out.push_back(current);
    return out;
}

/// Scans a run of "<tagNNN..>" tokens at position pos. Returns the parsed
/// indices and advances pos past the run. Digit counts are fixed per tag.
bool scan_token(const std::string& s, std::size_t& pos, const char* tag, int digits, int& index) {
    const std::size_t tag_len = 4;  // "<loc" / "<seg"
    if (s.compare(pos, tag_len, tag) != 0) return false;
    std::size_t p = pos + tag_len;
    int value = 0;
    for (int d = 0; d < digits; ++d) {
        if (p >= s.size() || !std::isdigit(static_cast<unsigned char>(s[p]))) return false;
        value = value * 10 + (s[p] - '0');
        ++p;
    }
    if (p >= s.size() || s[p] != '>') return false;
    pos = p + 1;
    index = value;
    return true;
}

bool contains_token_pattern(const std::string& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        std::size_t pos = i;
        int ignored;
        if (scan_token(s, pos, "<loc", 4, ignored) || scan_token(s, pos, "<seg", 3, ignored)) {
            return true;
        }
    }
    return false;
}

struct SegmentTokens {
    std::array<int, 4> loc{};
    std::array<int, 16> seg{};
    int seg_count = 0;
    std::string label;
};

/// Grammar per segment: LOC{4} [SEG{16}] whitespace label. Returns an error
/// message on violation, empty string on success.
std::string scan_segment(const std::string& segment, bool want_seg, SegmentTokens& out) {
    std::size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
        if (!scan_token(segment, pos, "<loc", 4, out.loc[i])) {
            return "expected 4 location tokens";
        }
        if (out.loc[i] >= kLocBins) {
            return "location token index out of range";
        }
    }
    if (want_seg) {
        for (int i = 0; i < 16; ++i) {
            if (!scan_token(segment, pos, "<seg", 3, out.seg[i])) {
                return "expected 16 segmentation tokens";
            }
            if (out.seg[i] >= kSegVocabulary) {
                return "segmentation token index out of range";
            }
            ++out.seg_count;
        }
    }
    if (pos >= segment.size() || !std::isspace(static_cast<unsigned char>(segment[pos]))) {
        return "expected whitespace before label";
    }
    out.label = trim(segment.substr(pos));
    if (out.label.empty()) return "missing label";
    if (contains_token_pattern(out.label)) return "unexpected tokens after label position";
    return {};
}

void note(std::vector<std::string>& diagnostics, std::size_t segment_index, const std::string& msg) {
    diagnostics.push_back("segment " + std::to_string(segment_index) + ": " + msg);
}

}  // namespace

DetectionParse parse_detection(const std::string& raw, const ImageInfo& image) {
    DetectionParse out;
    if (trim(raw).empty()) return out;
    const auto segments = split_segments(raw);
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const std::string seg = trim(segments[i]);
        if (seg.empty()) {
            note(out.diagnostics, i, "empty segment");
            continue;
        }
        SegmentTokens tokens;
        if (std::string err = scan_segment(seg, /*want_seg=*/false, tokens); !err.empty()) {
            note(out.diagnostics, i, err);
            continue;
        }
        BoxTokens box_tokens{{LocToken{tokens.loc[0]}, LocToken{tokens.loc[1]},
                              LocToken{tokens.loc[2]}, LocToken{tokens.loc[3]}}};
        try {
            BBox box = decode_box(box_tokens, image);
            out.instances.push_back({tokens.loc, box, tokens.label});
        } catch (const std::exception&) {
            note(out.diagnostics, i, "degenerate box");
        }
    }
    return out;
}

SegmentationParse parse_segmentation(const std::string& raw, const ImageInfo& image) {
    SegmentationParse out;
    if (trim(raw).empty()) return out;
    const auto segments = split_segments(raw);
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const std::string seg = trim(segments[i]);
        if (seg.empty()) {
            note(out.diagnostics, i, "empty segment");
            continue;
        }
        SegmentTokens tokens;
        if (std::string err = scan_segment(seg, /*want_seg=*/true, tokens); !err.empty()) {
            note(out.diagnostics, i, err);
            continue;
        }
        MaskTokens mask_tokens;
        mask_tokens.box = BoxTokens{{LocToken{tokens.loc[0]}, LocToken{tokens.loc[1]},
                                     LocToken{tokens.loc[2]}, LocToken{tokens.loc[3]}}};
        for (int k = 0; k < 16; ++k) mask_tokens.seg[k].index = tokens.seg[k];
        try {
            BBox box = decode_box(mask_tokens.box, image);
            BinaryMask mask = decode_mask(mask_tokens, image);
            if (mask.empty()) {
                note(out.diagnostics, i, "empty mask");
                continue;
            }
            out.instances.push_back({tokens.loc, tokens.seg, box, std::move(mask), tokens.label});
        } catch (const std::exception&) {
            note(out.diagnostics, i, "degenerate box");
        }
    }
    return out;
}

std::string normalize_answer(const std::string& raw) {
    std::string s;
    s.reserve(raw.size());
    for (unsigned char c : raw) s.push_back(static_cast<char>(std::tolower(c)));
    s = trim(s);
    while (!s.empty() && (s.back() == '.' || s.back() == ',')) s.pop_back();
    s = trim(s);

    static const std::unordered_map<std::string, std::string> kNumberWords = {
        {"zero", "0"}, {"one", "1"}, {"two", "2"},   {"three", "3"}, {"four", "4"}, {"five", "5"},
        {"six", "6"},  {"seven", "7"}, {"eight", "8"}, {"nine", "9"},  {"ten", "10"}};

    std::string out;
    std::string word;
    auto flush = [&] {
        if (word.empty()) return;
        auto it = kNumberWords.find(word);
        if (!out.empty()) out.push_back(' ');
        out += (it != kNumberWords.end()) ? it->second : word;
        word.clear();
    };
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            flush();
        } else {
            word.push_back(static_cast<char>(c));
        }
    }
    flush();
    return out;
}

ParsedOutput parse_output(Task task, const std::string& raw, const ImageInfo& image) {
    ParsedOutput out;
    out.task = task;
    switch (task) {
        case Task::detection: {
            auto parsed = parse_detection(raw, image);
            out.detections = std::move(parsed.instances);
            out.diagnostics = std::move(parsed.diagnostics);
            break;
        }
        case Task::segmentation: {
            auto parsed = parse_segmentation(raw, image);
            out.segmentations = std::move(parsed.instances);
            out.diagnostics = std::move(parsed.diagnostics);
            break;
        }
        case Task::diagnosis:
            out.text = normalize_answer(raw);
            break;
        case Task::report:
        case Task::vqa:
            out.text = raw;
            break;
    }
    return out;
}

std::vector<Prediction> read_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open predictions file: " + path);
    std::vector<Prediction> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        Prediction p;
        p.image_id = j.at("image_id").get<std::string>();
        const std::string task_text = j.at("task").get<std::string>();
        auto task = task_from_string(task_text);
        if (!task) {
            throw std::runtime_error("predictions line " + std::to_string(line_no) +
                                     ": unknown task '" + task_text + "'");
        }
        p.task = *task;
        p.output = j.at("output").get<std::string>();
        out.push_back(std::move(p));
    }
    return out;
}

void write_predictions(const std::vector<Prediction>& predictions, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write predictions file: " + path);
    for (const auto& p : predictions) {
        nlohmann::ordered_json j;
        j["image_id"] = p.image_id;
        j["task"] = to_string(p.task);
        j["output"] = p.output;
        out << j.dump() << '\n';
    }
}

}  // namespace cxrtask
