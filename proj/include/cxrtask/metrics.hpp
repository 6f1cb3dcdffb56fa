#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cxrtask/dataset_builder.hpp"
#include "cxrtask/geometry.hpp"

namespace cxrtask {

// ---------------------------------------------------------------------------
// classification

struct ClassificationResult {
    struct PerClass {
        std::int64_t gold = 0;
        std::int64_t predicted = 0;
        std::int64_t correct = 0;
        double precision = 0.0;  // 0 when predicted == 0
        double recall = 0.0;     // 0 when gold == 0
    };
    double accuracy = 0.0;
    double macro_recall = 0.0;     // unweighted mean over classes present in gold
    double macro_precision = 0.0;  // likewise
    std::map<std::string, PerClass> per_class;
    std::map<std::string, std::map<std::string, std::int64_t>> confusion;  // gold -> pred -> n
};

/// Predictions outside the label set are bucketed under "<other>" and are
/// always wrong. Throws std::invalid_argument on empty input.
ClassificationResult classification_metrics(
    const std::vector<std::pair<std::string, std::string>>& gold_pred_pairs,
    const std::vector<std::string>& label_set);

// ---------------------------------------------------------------------------
// text generation

/// Corpus-level BLEU-4: clipped n-gram precisions (n = 1..4) pooled over the
/// corpus, geometric mean, brevity penalty exp(1 - r/c) when c < r. A corpus
/// with zero 4-gram matches scores 0. Throws on empty or mismatched corpora.
double bleu4(const std::vector<std::string>& references,
             const std::vector<std::string>& hypotheses);

/// Mean per-pair LCS F1: P = LCS/|hyp|, R = LCS/|ref|, F1 = 2PR/(P+R).
double rouge_l(const std::vector<std::string>& references,
               const std::vector<std::string>& hypotheses);

/// Unigram-alignment METEOR without synonym resources: exact matches first,
/// then Porter-stem matches; F_mean = PR/(0.9P + 0.1R); fragmentation
/// penalty 0.5 * (chunks/matches)^3; corpus score is the mean over pairs.
double meteor_lite(const std::vector<std::string>& references,
                   const std::vector<std::string>& hypotheses);

// ---------------------------------------------------------------------------
// detection / segmentation mAP at IoU > 0.5

struct PRPoint {
    double recall = 0.0;
    double precision = 0.0;
};

struct ClassAP {
    std::int64_t gold = 0;
    std::vector<bool> tp_flags;  // per ranked prediction of this class
    std::vector<PRPoint> curve;
    double ap = 0.0;
};

struct APResult {
    std::map<std::string, ClassAP> per_class;  // classes with >= 1 gold instance
    double mean_ap = 0.0;
};

struct BoxInstance {
    BBox box;
    std::string label;
};

struct MaskInstance {
    BinaryMask mask;  // image-canvas mask
    std::string label;
};

/// Gold and ranked predictions for one image; predictions are in emission
/// order, which doubles as the confidence ranking.
template <typename Instance>
struct ImageInstances {
    std::string image_id;
    std::vector<Instance> gold;
    std::vector<Instance> predicted;
};

/// Greedy matcher per the evaluation protocol: walk class-c predictions in
/// rank order; a prediction is a true positive when IoU > 0.5 (strict)
/// against an unmatched same-class gold instance (the highest-IoU one,
/// ties to the lowest gold index); everything else is a false positive.
/// AP uses all-point interpolation (precision envelope); mAP averages over
/// classes with gold instances.
APResult map_at_50(const std::vector<ImageInstances<BoxInstance>>& images);
APResult map_at_50(const std::vector<ImageInstances<MaskInstance>>& images);

// ---------------------------------------------------------------------------
// sequence negative log-likelihood

/// Per-token 0/1 weights: 1 on response (suffix) tokens, 0 on prompt and
/// image tokens.
struct LossMask {
    std::vector<std::uint8_t> weights;

    static LossMask response_only(std::size_t prompt_tokens, std::size_t response_tokens);
};

/// L = -sum_l w_l * log p_l (natural log) over the probabilities of the
/// correct next token. Throws on length mismatch or p outside (0, 1].
double sequence_nll(const std::vector<double>& token_probs, const LossMask& mask);

// ---------------------------------------------------------------------------
// VQA evaluation

struct VqaEvaluation {
    std::int64_t closed_total = 0;
    std::int64_t closed_correct = 0;
    double closed_accuracy = 0.0;
    // per closed category: (correct, total)
    std::map<std::string, std::pair<std::int64_t, std::int64_t>> per_category;
    std::int64_t open_total = 0;
    double open_bleu4 = 0.0;
    double open_meteor = 0.0;
    double open_rouge_l = 0.0;
};

/// Closed answers compare exactly after normalize_answer; open answers pool
/// into the text metrics. Missing predictions (shorter list) count wrong /
/// as empty hypotheses. Records must carry VQA meta.
VqaEvaluation evaluate_vqa(const std::vector<TaskRecord>& records,
                           const std::vector<std::string>& predictions);

}  // namespace cxrtask
