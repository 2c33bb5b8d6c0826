#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcp/raster.hpp"

namespace gcp::metrics {

inline constexpr int kThresholds = 256;
inline constexpr double kBeta2 = 0.3;
inline constexpr double kAlpha = 0.5;

/// Prediction map and binary ground truth of one image. Prediction values
/// are read as v / 255.
struct MapPair {
    std::string id;
    GrayImage prediction;
    BinaryMask truth;
    std::optional<std::string> group;
};

BinaryMask binarize(const GrayImage& prediction, double threshold);

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
};

PrecisionRecall precision_recall(const BinaryMask& predicted, const BinaryMask& truth);

double f_beta(PrecisionRecall pr, double beta2 = kBeta2);

double mae(const GrayImage& prediction, const BinaryMask& truth);

/// min(2 * mean(S), 1 - 1/255)
double adaptive_threshold(const GrayImage& prediction);

struct CurveSummary {
    double max = 0.0;
    double avg = 0.0;
};

/// F over the 256 thresholds k/255; avg is F at the adaptive threshold.
CurveSummary f_measure(const GrayImage& prediction, const BinaryMask& truth, double beta2 = kBeta2);

/// Enhanced-alignment score of one binary map.
double e_score(const BinaryMask& predicted, const BinaryMask& truth);

/// E over the 256 thresholds; avg is the mean over the sweep.
CurveSummary e_measure(const GrayImage& prediction, const BinaryMask& truth);

double s_measure(const GrayImage& prediction, const BinaryMask& truth, double alpha = kAlpha);

struct ImageScores {
    std::string id;
    std::optional<std::string> group;
    double mae = 0.0;
    double f_max = 0.0;
    double f_avg = 0.0;
    double e_max = 0.0;
    double e_avg = 0.0;
    double s_alpha = 0.0;
};

ImageScores evaluate_pair(const MapPair& pair);

struct Aggregate {
    std::size_t count = 0;
    double mae = 0.0;
    double f_max = 0.0;
    double f_avg = 0.0;
    double e_max = 0.0;
    double e_avg = 0.0;
    double s_alpha = 0.0;
};

struct MetricReport {
    std::vector<ImageScores> per_image;
    Aggregate aggregate;
    std::vector<std::pair<std::string, Aggregate>> per_group;

    /// One JSON line per image, then the aggregate and any group blocks.
    [[nodiscard]] std::string to_jsonl() const;
};

MetricReport evaluate_dataset(const std::vector<MapPair>& pairs, bool per_group = false, int jobs = 1);

/// Checks that prediction and ground-truth id sets coincide; throws a
/// RuntimeError listing every unmatched id otherwise.
void check_id_sets(const std::vector<std::string>& prediction_ids, const std::vector<std::string>& truth_ids);

} // namespace gcp::metrics
