#include "gcp/metrics.hpp"

#include <algorithm>
#include <array>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>

#include "gcp/error.hpp"
#include "gcp/parallel.hpp"

using nlohmann::json;

namespace gcp::metrics {

namespace {

constexpr double kEps = DBL_EPSILON;

void require_same_size(Size a, Size b) {
    if (a != b)
        throw ValidationError("prediction and ground truth dimensions differ");
}

// Per-value histograms of the prediction split by ground truth.
struct Histogram {
    std::array<std::int64_t, 256> fg{}; // G = 1
    std::array<std::int64_t, 256> bg{}; // G = 0
    std::int64_t positives = 0;
    std::int64_t total = 0;
    std::int64_t value_sum = 0;
};

Histogram histogram(const GrayImage& s, const BinaryMask& g) {
    require_same_size(s.size(), g.size());
    Histogram h;
    auto sv = s.pixels();
    auto gv = g.bits();
    for (std::size_t i = 0; i < sv.size(); ++i) {
        if (gv[i]) {
            ++h.fg[sv[i]];
            ++h.positives;
        } else {
            ++h.bg[sv[i]];
        }
        h.value_sum += sv[i];
    }
    h.total = static_cast<std::int64_t>(sv.size());
    return h;
}

// Confusion counts of the binarization v >= k, for every k.
struct Sweep {
    std::array<std::int64_t, 257> tp{};
    std::array<std::int64_t, 257> fp{};
};

Sweep sweep(const Histogram& h) {
    Sweep s;
    for (int k = 255; k >= 0; --k) {
        s.tp[k] = s.tp[k + 1] + h.fg[k];
        s.fp[k] = s.fp[k + 1] + h.bg[k];
    }
    return s;
}

// Smallest integer level v with v / 255 >= threshold (256 if none).
int first_level_at_or_above(double threshold) {
    for (int v = 0; v < 256; ++v)
        if (static_cast<double>(v) / 255.0 >= threshold)
            return v;
    return 256;
}

PrecisionRecall pr_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
    PrecisionRecall pr;
    pr.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    pr.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    return pr;
}

double alignment_term(double phi_s, double phi_g) {
    const double denom = phi_s * phi_s + phi_g * phi_g;
    const double xi = denom == 0.0 ? 1.0 : 2.0 * phi_s * phi_g / denom;
    return (1.0 + xi) * (1.0 + xi) / 4.0;
}

// E-measure from confusion counts: the enhanced term only depends on the
// (prediction, truth) pair of each pixel, so four terms cover the image.
double e_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t positives, std::int64_t total) {
    const std::int64_t predicted = tp + fp;
    const double n = static_cast<double>(total);
    if (positives == 0)
        return 1.0 - static_cast<double>(predicted) / n;
    if (positives == total)
        return static_cast<double>(predicted) / n;
    const double mu_s = static_cast<double>(predicted) / n;
    const double mu_g = static_cast<double>(positives) / n;
    const std::int64_t fn = positives - tp;
    const std::int64_t tn = total - tp - fp - fn;
    const double sum = static_cast<double>(tp) * alignment_term(1.0 - mu_s, 1.0 - mu_g) +
                       static_cast<double>(fp) * alignment_term(1.0 - mu_s, -mu_g) +
                       static_cast<double>(fn) * alignment_term(-mu_s, 1.0 - mu_g) +
                       static_cast<double>(tn) * alignment_term(-mu_s, -mu_g);
    return sum / n;
}

// a * b - c * d without overflow for image-sized sums.
double exact_diff(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
    return static_cast<double>(static_cast<__int128>(a) * b - static_cast<__int128>(c) * d);
}

// Integer moments of one region; values are 8-bit levels, truth is binary.
struct Moments {
    std::int64_t n = 0;
    std::int64_t n_fg = 0;
    std::int64_t sum = 0;    // Σ v
    std::int64_t sum_sq = 0; // Σ v²
    std::int64_t sum_fg = 0; // Σ v over G = 1
    std::int64_t sum_sq_fg = 0;
};

Moments moments(const GrayImage& s, const BinaryMask& g, int x0, int x1, int y0, int y1) {
    Moments m;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            const std::int64_t v = s.at(x, y);
            ++m.n;
            m.sum += v;
            m.sum_sq += v * v;
            if (g.at(x, y)) {
                ++m.n_fg;
                m.sum_fg += v;
                m.sum_sq_fg += v * v;
            }
        }
    return m;
}

// Structural similarity of one quadrant, computed from exact integer sums.
double region_ssim(const Moments& m) {
    if (m.n == 0)
        return 0.0;
    const double n = static_cast<double>(m.n);
    const double x = static_cast<double>(m.sum) / (255.0 * n);
    const double y = static_cast<double>(m.n_fg) / n;
    const double denom = n - 1.0 + kEps;
    // N Σv² - (Σv)² and N Σ(vG) - Σv ΣG are exact; scale afterwards.
    const double var_x = exact_diff(m.n, m.sum_sq, m.sum, m.sum) / (n * n * 255.0 * 255.0) * n / denom;
    const double var_y = exact_diff(m.n, m.n_fg, m.n_fg, m.n_fg) / (n * n) * n / denom;
    const double cov = exact_diff(m.n, m.sum_fg, m.sum, m.n_fg) / (n * n * 255.0) * n / denom;
    const double alpha = 4.0 * x * y * cov;
    const double beta = (x * x + y * y) * (var_x + var_y);
    if (alpha != 0.0)
        return alpha / (beta + kEps);
    return beta == 0.0 ? 1.0 : 0.0;
}

double object_score(double mean, double std_dev) { return 2.0 * mean / (mean * mean + 1.0 + std_dev + kEps); }

// Sample standard deviation of v / 255 from integer sums of levels v.
double sample_std(std::int64_t n, std::int64_t sum, std::int64_t sum_sq) {
    if (n < 2)
        return 0.0;
    const double num = exact_diff(n, sum_sq, sum, sum) / (255.0 * 255.0);
    return std::sqrt(std::max(0.0, num / (static_cast<double>(n) * static_cast<double>(n - 1))));
}

double s_object(const Moments& all) {
    const std::int64_t n_bg = all.n - all.n_fg;
    const double fg_mean = static_cast<double>(all.sum_fg) / (255.0 * static_cast<double>(all.n_fg));
    const double fg_std = sample_std(all.n_fg, all.sum_fg, all.sum_sq_fg);
    // Background scores 1 - S, whose spread equals that of S.
    const std::int64_t bg_sum = all.sum - all.sum_fg;
    const double bg_mean = 1.0 - static_cast<double>(bg_sum) / (255.0 * static_cast<double>(n_bg));
    const double bg_std = sample_std(n_bg, bg_sum, all.sum_sq - all.sum_sq_fg);
    const double u = static_cast<double>(all.n_fg) / static_cast<double>(all.n);
    return u * object_score(fg_mean, fg_std) + (1.0 - u) * object_score(bg_mean, bg_std);
}

double s_region(const GrayImage& s, const BinaryMask& g) {
    const int w = g.width(), h = g.height();
    double sx = 0, sy = 0;
    std::int64_t count = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (g.at(x, y)) {
                sx += x;
                sy += y;
                ++count;
            }
    // 1-based centroid, which doubles as the width/height of the left/top parts.
    const int cx = static_cast<int>(std::round(sx / static_cast<double>(count))) + 1;
    const int cy = static_cast<int>(std::round(sy / static_cast<double>(count))) + 1;
    const double area = static_cast<double>(w) * h;
    const double w1 = static_cast<double>(cx) * cy / area;
    const double w2 = static_cast<double>(w - cx) * cy / area;
    const double w3 = static_cast<double>(cx) * (h - cy) / area;
    const double w4 = 1.0 - w1 - w2 - w3;
    return w1 * region_ssim(moments(s, g, 0, cx, 0, cy)) + w2 * region_ssim(moments(s, g, cx, w, 0, cy)) +
           w3 * region_ssim(moments(s, g, 0, cx, cy, h)) + w4 * region_ssim(moments(s, g, cx, w, cy, h));
}

} // namespace

BinaryMask binarize(const GrayImage& prediction, double threshold) {
    BinaryMask out(prediction.size());
    for (int y = 0; y < prediction.height(); ++y)
        for (int x = 0; x < prediction.width(); ++x)
            out.set(x, y, static_cast<double>(prediction.at(x, y)) / 255.0 >= threshold);
    return out;
}

PrecisionRecall precision_recall(const BinaryMask& predicted, const BinaryMask& truth) {
    require_same_size(predicted.size(), truth.size());
    const auto tp = static_cast<std::int64_t>(intersection_count(predicted, truth));
    const auto fp = static_cast<std::int64_t>(predicted.count()) - tp;
    const auto fn = static_cast<std::int64_t>(truth.count()) - tp;
    return pr_from_counts(tp, fp, fn);
}

double f_beta(PrecisionRecall pr, double beta2) {
    const double denom = beta2 * pr.precision + pr.recall;
    if (denom == 0.0)
        return 0.0;
    return (1.0 + beta2) * pr.precision * pr.recall / denom;
}

double mae(const GrayImage& prediction, const BinaryMask& truth) {
    require_same_size(prediction.size(), truth.size());
    auto sv = prediction.pixels();
    auto gv = truth.bits();
    if (sv.empty())
        return 0.0;
    std::int64_t err = 0;
    for (std::size_t i = 0; i < sv.size(); ++i)
        err += gv[i] ? 255 - sv[i] : sv[i];
    return static_cast<double>(err) / (255.0 * static_cast<double>(sv.size()));
}

double adaptive_threshold(const GrayImage& prediction) {
    std::int64_t sum = 0;
    for (auto v : prediction.pixels())
        sum += v;
    const double mean = prediction.pixels().empty()
                            ? 0.0
                            : static_cast<double>(sum) / (255.0 * static_cast<double>(prediction.pixels().size()));
    return std::min(2.0 * mean, 1.0 - 1.0 / 255.0);
}

CurveSummary f_measure(const GrayImage& prediction, const BinaryMask& truth, double beta2) {
    const Histogram h = histogram(prediction, truth);
    if (h.positives == 0)
        throw ValidationError("F-measure needs a non-empty ground truth");
    const Sweep sw = sweep(h);
    CurveSummary out;
    for (int k = 0; k < kThresholds; ++k) {
        const auto pr = pr_from_counts(sw.tp[k], sw.fp[k], h.positives - sw.tp[k]);
        out.max = std::max(out.max, f_beta(pr, beta2));
    }
    const int k = first_level_at_or_above(adaptive_threshold(prediction));
    out.avg = f_beta(pr_from_counts(sw.tp[k], sw.fp[k], h.positives - sw.tp[k]), beta2);
    return out;
}

double e_score(const BinaryMask& predicted, const BinaryMask& truth) {
    require_same_size(predicted.size(), truth.size());
    if (truth.size().area() == 0)
        return 1.0;
    const auto tp = static_cast<std::int64_t>(intersection_count(predicted, truth));
    const auto fp = static_cast<std::int64_t>(predicted.count()) - tp;
    return e_from_counts(tp, fp, static_cast<std::int64_t>(truth.count()),
                         static_cast<std::int64_t>(truth.size().area()));
}

CurveSummary e_measure(const GrayImage& prediction, const BinaryMask& truth) {
    const Histogram h = histogram(prediction, truth);
    CurveSummary out;
    if (h.total == 0)
        return {1.0, 1.0};
    const Sweep sw = sweep(h);
    double sum = 0.0;
    for (int k = 0; k < kThresholds; ++k) {
        const double e = e_from_counts(sw.tp[k], sw.fp[k], h.positives, h.total);
        out.max = std::max(out.max, e);
        sum += e;
    }
    out.avg = sum / kThresholds;
    return out;
}

double s_measure(const GrayImage& prediction, const BinaryMask& truth, double alpha) {
    require_same_size(prediction.size(), truth.size());
    const Moments all = moments(prediction, truth, 0, truth.width(), 0, truth.height());
    if (all.n == 0)
        return 1.0;
    const double mean_s = static_cast<double>(all.sum) / (255.0 * static_cast<double>(all.n));
    if (all.n_fg == 0)
        return 1.0 - mean_s;
    if (all.n_fg == all.n)
        return mean_s;
    const double q = (1.0 - alpha) * s_object(all) + alpha * s_region(prediction, truth);
    return std::clamp(q, 0.0, 1.0);
}

ImageScores evaluate_pair(const MapPair& pair) {
    require_same_size(pair.prediction.size(), pair.truth.size());
    ImageScores s;
    s.id = pair.id;
    s.group = pair.group;
    s.mae = mae(pair.prediction, pair.truth);
    if (pair.truth.any()) {
        const auto f = f_measure(pair.prediction, pair.truth);
        s.f_max = f.max;
        s.f_avg = f.avg;
    }
    const auto e = e_measure(pair.prediction, pair.truth);
    s.e_max = e.max;
    s.e_avg = e.avg;
    s.s_alpha = s_measure(pair.prediction, pair.truth);
    return s;
}

namespace {

Aggregate mean_of(const std::vector<const ImageScores*>& rows) {
    Aggregate a;
    a.count = rows.size();
    if (rows.empty())
        return a;
    for (const auto* r : rows) {
        a.mae += r->mae;
        a.f_max += r->f_max;
        a.f_avg += r->f_avg;
        a.e_max += r->e_max;
        a.e_avg += r->e_avg;
        a.s_alpha += r->s_alpha;
    }
    const double n = static_cast<double>(rows.size());
    a.mae /= n;
    a.f_max /= n;
    a.f_avg /= n;
    a.e_max /= n;
    a.e_avg /= n;
    a.s_alpha /= n;
    return a;
}

json columns(double mae, double f_max, double f_avg, double e_max, double e_avg, double s_alpha) {
    return json{{"mae", mae}, {"f_max", f_max}, {"f_avg", f_avg}, {"e_max", e_max}, {"e_avg", e_avg}, {"s_alpha", s_alpha}};
}

json aggregate_json(const Aggregate& a) {
    json j = columns(a.mae, a.f_max, a.f_avg, a.e_max, a.e_avg, a.s_alpha);
    j["count"] = a.count;
    return j;
}

} // namespace

MetricReport evaluate_dataset(const std::vector<MapPair>& pairs, bool per_group, int jobs) {
    if (pairs.empty())
        throw ValidationError("nothing to evaluate");
    MetricReport report;
    report.per_image.resize(pairs.size());
    parallel_for(pairs.size(), jobs, [&](std::size_t i) { report.per_image[i] = evaluate_pair(pairs[i]); });

    std::vector<const ImageScores*> all;
    std::map<std::string, std::vector<const ImageScores*>> groups;
    for (const auto& r : report.per_image) {
        all.push_back(&r);
        if (per_group)
            groups[r.group.value_or("")].push_back(&r);
    }
    report.aggregate = mean_of(all);
    for (const auto& [label, rows] : groups)
        report.per_group.emplace_back(label, mean_of(rows));
    return report;
}

std::string MetricReport::to_jsonl() const {
    std::string out;
    for (const auto& r : per_image) {
        json j{{"id", r.id}};
        if (r.group)
            j["group"] = *r.group;
        j.update(columns(r.mae, r.f_max, r.f_avg, r.e_max, r.e_avg, r.s_alpha));
        out += j.dump() + '\n';
    }
    out += json{{"aggregate", aggregate_json(aggregate)}}.dump() + '\n';
    for (const auto& [label, agg] : per_group)
        out += json{{"group", label}, {"aggregate", aggregate_json(agg)}}.dump() + '\n';
    return out;
}

void check_id_sets(const std::vector<std::string>& prediction_ids, const std::vector<std::string>& truth_ids) {
    const std::set<std::string> pred(prediction_ids.begin(), prediction_ids.end());
    const std::set<std::string> gt(truth_ids.begin(), truth_ids.end());
    std::string missing, extra;
    for (const auto& id : gt)
        if (!pred.count(id))
            missing += (missing.empty() ? "" : ", ") + id;
    for (const auto& id : pred)
        if (!gt.count(id))
            extra += (extra.empty() ? "" : ", ") + id;
    if (missing.empty() && extra.empty())
        return;
    std::string msg = "prediction/ground-truth id mismatch";
    if (!missing.empty())
        msg += "; no prediction for: " + missing;
    if (!extra.empty())
        msg += "; no ground truth for: " + extra;
    throw RuntimeError(msg);
}

} // namespace gcp::metrics
