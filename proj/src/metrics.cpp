#include "cxrtask/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "cxrtask/output_parser.hpp"
#include "cxrtask/text.hpp"

namespace cxrtask {

ClassificationResult classification_metrics(
    const std::vector<std::pair<std::string, std::string>>& gold_pred_pairs,
    const std::vector<std::string>& label_set) {
    if (gold_pred_pairs.empty()) {
        throw std::invalid_argument("classification_metrics: empty input");
    }
    const std::set<std::string> labels(label_set.begin(), label_set.end());

    ClassificationResult out;
    for (const auto& label : label_set) out.per_class[label];

    std::int64_t correct_total = 0;
    for (const auto& [gold, pred] : gold_pred_pairs) {
        const std::string pred_bucket = labels.count(pred) ? pred : "<other>";
        ++out.confusion[gold][pred_bucket];
        out.per_class[gold].gold += 1;
        if (pred_bucket != "<other>") out.per_class[pred_bucket].predicted += 1;
        if (gold == pred_bucket) {
            ++correct_total;
            out.per_class[gold].correct += 1;
        }
    }
    out.accuracy = static_cast<double>(correct_total) / gold_pred_pairs.size();

    double recall_sum = 0.0, precision_sum = 0.0;
    std::int64_t present = 0;
    for (auto& [label, pc] : out.per_class) {
        pc.recall = pc.gold > 0 ? static_cast<double>(pc.correct) / pc.gold : 0.0;
        pc.precision = pc.predicted > 0 ? static_cast<double>(pc.correct) / pc.predicted : 0.0;
        if (pc.gold > 0) {  // macro means run over classes present in gold
            ++present;
            recall_sum += pc.recall;
            precision_sum += pc.precision;
        }
    }
    if (present > 0) {
        out.macro_recall = recall_sum / present;
        out.macro_precision = precision_sum / present;
    }
    return out;
}

// ---------------------------------------------------------------------------
// text generation

namespace {

using TokenList = std::vector<std::string>;

std::vector<TokenList> tokenize_corpus(const std::vector<std::string>& texts) {
    std::vector<TokenList> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(tokenize(t));
    return out;
}

void check_corpus(const std::vector<std::string>& references,
                  const std::vector<std::string>& hypotheses, const char* name) {
    if (references.empty()) {
        throw std::invalid_argument(std::string(name) + ": empty corpus");
    }
    if (references.size() != hypotheses.size()) {
        throw std::invalid_argument(std::string(name) +
                                    ": reference and hypothesis counts differ");
    }
}

std::unordered_map<std::string, std::int64_t> ngram_counts(const TokenList& tokens, int n) {
    std::unordered_map<std::string, std::int64_t> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key;
        for (int k = 0; k < n; ++k) {
            key += tokens[i + k];
            key.push_back('\x1f');
        }
        ++counts[key];
    }
    return counts;
}

}  // namespace

double bleu4(const std::vector<std::string>& references,
             const std::vector<std::string>& hypotheses) {
    check_corpus(references, hypotheses, "bleu4");
    const auto refs = tokenize_corpus(references);
    const auto hyps = tokenize_corpus(hypotheses);

    std::int64_t ref_length = 0, hyp_length = 0;
    std::array<std::int64_t, 4> matched{}, total{};
    for (std::size_t i = 0; i < refs.size(); ++i) {
        ref_length += static_cast<std::int64_t>(refs[i].size());
        hyp_length += static_cast<std::int64_t>(hyps[i].size());
        for (int n = 1; n <= 4; ++n) {
            const auto ref_counts = ngram_counts(refs[i], n);
            const auto hyp_counts = ngram_counts(hyps[i], n);
            for (const auto& [gram, count] : hyp_counts) {
                total[n - 1] += count;
                const auto it = ref_counts.find(gram);
                if (it != ref_counts.end()) matched[n - 1] += std::min(count, it->second);
            }
        }
    }
    double log_precision_sum = 0.0;
    for (int n = 0; n < 4; ++n) {
        if (matched[n] == 0 || total[n] == 0) return 0.0;
        log_precision_sum += std::log(static_cast<double>(matched[n]) / total[n]);
    }
    double brevity = 1.0;
    if (hyp_length < ref_length && hyp_length > 0) {
        brevity = std::exp(1.0 - static_cast<double>(ref_length) / hyp_length);
    }
    return brevity * std::exp(log_precision_sum / 4.0);
}

namespace {

std::size_t lcs_length(const TokenList& a, const TokenList& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

double rouge_l(const std::vector<std::string>& references,
               const std::vector<std::string>& hypotheses) {
    check_corpus(references, hypotheses, "rouge_l");
    const auto refs = tokenize_corpus(references);
    const auto hyps = tokenize_corpus(hypotheses);

    double sum = 0.0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const double lcs = static_cast<double>(lcs_length(refs[i], hyps[i]));
        const double p = hyps[i].empty() ? 0.0 : lcs / hyps[i].size();
        const double r = refs[i].empty() ? 0.0 : lcs / refs[i].size();
        sum += (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    return sum / refs.size();
}

namespace {

struct MeteorAlignment {
    std::int64_t matches = 0;
    std::int64_t chunks = 0;
};

/// Two-stage greedy alignment: exact surface matches first, then Porter-stem
/// matches among the leftovers. Each hypothesis token claims the first
/// unmatched reference candidate in reading order. Chunks count maximal runs
/// of pairs contiguous in both strings.
MeteorAlignment align_meteor(const TokenList& hyp, const TokenList& ref) {
    std::vector<int> hyp_to_ref(hyp.size(), -1);
    std::vector<bool> ref_used(ref.size(), false);

    auto run_stage = [&](auto&& key) {
        std::vector<std::string> ref_keys(ref.size());
        for (std::size_t j = 0; j < ref.size(); ++j) ref_keys[j] = key(ref[j]);
        for (std::size_t i = 0; i < hyp.size(); ++i) {
            if (hyp_to_ref[i] >= 0) continue;
            const std::string hk = key(hyp[i]);
            for (std::size_t j = 0; j < ref.size(); ++j) {
                if (!ref_used[j] && ref_keys[j] == hk) {
                    hyp_to_ref[i] = static_cast<int>(j);
                    ref_used[j] = true;
                    break;
                }
            }
        }
    };
    run_stage([](const std::string& w) { return w; });
    run_stage([](const std::string& w) { return porter_stem(w); });

    MeteorAlignment out;
    int prev_ref = -2;
    bool in_chunk = false;
    for (std::size_t i = 0; i < hyp.size(); ++i) {
        if (hyp_to_ref[i] < 0) {
            in_chunk = false;
            continue;
        }
        ++out.matches;
        if (!(in_chunk && hyp_to_ref[i] == prev_ref + 1)) ++out.chunks;
        prev_ref = hyp_to_ref[i];
        in_chunk = true;
    }
    return out;
}

}  // namespace

double meteor_lite(const std::vector<std::string>& references,
                   const std::vector<std::string>& hypotheses) {
    check_corpus(references, hypotheses, "meteor_lite");
    const auto refs = tokenize_corpus(references);
    const auto hyps = tokenize_corpus(hypotheses);

    constexpr double kAlpha = 0.9;
    constexpr double kBeta = 3.0;
    constexpr double kGamma = 0.5;

    double sum = 0.0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (refs[i].empty() || hyps[i].empty()) continue;  // scores 0
        const MeteorAlignment alignment = align_meteor(hyps[i], refs[i]);
        if (alignment.matches == 0) continue;
        const double p = static_cast<double>(alignment.matches) / hyps[i].size();
        const double r = static_cast<double>(alignment.matches) / refs[i].size();
        const double f_mean = p * r / (kAlpha * p + (1.0 - kAlpha) * r);
        const double frag = static_cast<double>(alignment.chunks) / alignment.matches;
        const double penalty = kGamma * std::pow(frag, kBeta);
        sum += f_mean * (1.0 - penalty);
    }
    return sum / refs.size();
}

// ---------------------------------------------------------------------------
// mAP

namespace {

double instance_iou(const BoxInstance& a, const BoxInstance& b) { return iou(a.box, b.box); }
double instance_iou(const MaskInstance& a, const MaskInstance& b) { return iou(a.mask, b.mask); }

template <typename Instance>
APResult map_at_50_impl(const std::vector<ImageInstances<Instance>>& images) {
    constexpr double kIouThreshold = 0.5;  // strict >

    // classes with at least one gold instance
    std::set<std::string> classes;
    for (const auto& image : images) {
        for (const auto& g : image.gold) classes.insert(g.label);
    }

    APResult out;
    for (const auto& cls : classes) {
        ClassAP entry;

        // ranked class predictions: (image index, per-image emission rank)
        struct Ranked {
            std::size_t image;
            std::size_t rank;
        };
        std::vector<Ranked> ranked;
        for (std::size_t i = 0; i < images.size(); ++i) {
            entry.gold += static_cast<std::int64_t>(
                std::count_if(images[i].gold.begin(), images[i].gold.end(),
                              [&](const Instance& g) { return g.label == cls; }));
            for (std::size_t r = 0; r < images[i].predicted.size(); ++r) {
                if (images[i].predicted[r].label == cls) ranked.push_back({i, r});
            }
        }
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const Ranked& a, const Ranked& b) { return a.rank < b.rank; });

        std::vector<std::vector<bool>> gold_matched(images.size());
        for (std::size_t i = 0; i < images.size(); ++i) {
            gold_matched[i].assign(images[i].gold.size(), false);
        }

        for (const Ranked& item : ranked) {
            const auto& image = images[item.image];
            const Instance& pred = image.predicted[item.rank];
            double best_iou = 0.0;
            std::size_t best_gold = image.gold.size();
            for (std::size_t g = 0; g < image.gold.size(); ++g) {
                if (image.gold[g].label != cls || gold_matched[item.image][g]) continue;
                const double overlap = instance_iou(pred, image.gold[g]);
                if (overlap > best_iou) {
                    best_iou = overlap;
                    best_gold = g;
                }
            }
            if (best_iou > kIouThreshold && best_gold < image.gold.size()) {
                gold_matched[item.image][best_gold] = true;
                entry.tp_flags.push_back(true);
            } else {
                entry.tp_flags.push_back(false);
            }
        }

        // PR curve and all-point interpolated AP
        std::int64_t tp = 0;
        std::vector<double> precision(entry.tp_flags.size());
        std::vector<double> recall(entry.tp_flags.size());
        for (std::size_t k = 0; k < entry.tp_flags.size(); ++k) {
            if (entry.tp_flags[k]) ++tp;
            precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
            recall[k] = entry.gold > 0 ? static_cast<double>(tp) / entry.gold : 0.0;
            entry.curve.push_back({recall[k], precision[k]});
        }
        double envelope = 0.0;
        double ap = 0.0;
        double prev_recall = 0.0;
        // walk backwards to build the precision envelope, then accumulate
        std::vector<double> env(precision.size());
        for (std::size_t k = precision.size(); k-- > 0;) {
            envelope = std::max(envelope, precision[k]);
            env[k] = envelope;
        }
        for (std::size_t k = 0; k < precision.size(); ++k) {
            ap += (recall[k] - prev_recall) * env[k];
            prev_recall = recall[k];
        }
        entry.ap = ap;
        out.per_class.emplace(cls, std::move(entry));
    }

    if (!out.per_class.empty()) {
        double sum = 0.0;
        for (const auto& [cls, entry] : out.per_class) sum += entry.ap;
        out.mean_ap = sum / static_cast<double>(out.per_class.size());
    }
    return out;
}

}  // namespace

APResult map_at_50(const std::vector<ImageInstances<BoxInstance>>& images) {
    return map_at_50_impl(images);
}

APResult map_at_50(const std::vector<ImageInstances<MaskInstance>>& images) {
    return map_at_50_impl(images);
}

// ---------------------------------------------------------------------------
// sequence NLL

LossMask LossMask::response_only(std::size_t prompt_tokens, std::size_t response_tokens) {
    LossMask mask;
    mask.weights.assign(prompt_tokens, 0);
    mask.weights.insert(mask.weights.end(), response_tokens, 1);
    return mask;
}

double sequence_nll(const std::vector<double>& token_probs, const LossMask& mask) {
    if (token_probs.size() != mask.weights.size()) {
        throw std::invalid_argument("sequence_nll: probability and mask lengths differ");
    }
    // long double accumulation keeps the sum additive over sequence
    // concatenation to well below 1e-12
    long double loss = 0.0L;
    for (std::size_t i = 0; i < token_probs.size(); ++i) {
        const double p = token_probs[i];
        if (!(p > 0.0) || p > 1.0) {
            throw std::invalid_argument("sequence_nll: probability outside (0, 1]");
        }
        if (mask.weights[i]) loss -= std::log(static_cast<long double>(p));
    }
    return static_cast<double>(loss);
}

// ---------------------------------------------------------------------------
// VQA

VqaEvaluation evaluate_vqa(const std::vector<TaskRecord>& records,
                           const std::vector<std::string>& predictions) {
    VqaEvaluation out;
    std::vector<std::string> open_refs, open_hyps;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const TaskRecord& record = records[i];
        if (!record.meta) {
            throw std::invalid_argument("evaluate_vqa: record without VQA meta");
        }
        const std::string prediction = i < predictions.size() ? predictions[i] : std::string();
        if (record.meta->closed) {
            ++out.closed_total;
            auto& [correct, total] = out.per_category[record.meta->category];
            ++total;
            if (normalize_answer(prediction) == normalize_answer(record.suffix)) {
                ++out.closed_correct;
                ++correct;
            }
        } else {
            ++out.open_total;
            open_refs.push_back(record.suffix);
            open_hyps.push_back(prediction);
        }
    }
    if (out.closed_total > 0) {
        out.closed_accuracy = static_cast<double>(out.closed_correct) / out.closed_total;
    }
    if (!open_refs.empty()) {
        out.open_bleu4 = bleu4(open_refs, open_hyps);
        out.open_meteor = meteor_lite(open_refs, open_hyps);
        out.open_rouge_l = rouge_l(open_refs, open_hyps);
    }
    return out;
}

}  // namespace cxrtask
