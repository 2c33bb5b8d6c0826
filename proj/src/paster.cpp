#include "gcp/paster.hpp"

#include <algorithm>
#include <cmath>

#include "gcp/error.hpp"
#include "gcp/imaging.hpp"

namespace gcp {

void SynthesisConfig::validate() const {
    if (!(ratio_min > 0.0))
        throw ValidationError("ratio_min must be > 0");
    if (!(ratio_min <= ratio_max))
        throw ValidationError("ratio_min must be <= ratio_max");
    if (!(ratio_max < 1.0))
        throw ValidationError("ratio_max must be < 1");
    if (!(flip_probability >= 0.0 && flip_probability <= 1.0))
        throw ValidationError("flip_probability must lie in [0, 1]");
    if (!(occlusion_max >= 0.0 && occlusion_max < 1.0))
        throw ValidationError("occlusion_max must lie in [0, 1)");
    if (max_attempts < 1)
        throw ValidationError("max_attempts must be >= 1");
    if (samples_per_canvas < 0)
        throw ValidationError("samples_per_canvas must be >= 0");
    if (supplement_factor < 0)
        throw ValidationError("supplement_factor must be >= 0");
    if (!(border_tolerance >= 0.0 && border_tolerance <= 1.0))
        throw ValidationError("border_tolerance must lie in [0, 1]");
    if (edge_thickness < 1)
        throw ValidationError("edge_thickness must be >= 1");
    if (!(shrink_factor > 0.0 && shrink_factor < 1.0))
        throw ValidationError("shrink_factor must lie in (0, 1)");
}

std::string pick_source_group(const GroupedCorpus& corpus, const std::string& target_group, Rng& rng) {
    if (corpus.z() < 2)
        throw ValidationError("counterfactual source impossible: corpus has a single group");
    std::vector<const std::string*> others;
    others.reserve(corpus.z());
    for (const auto& g : corpus.groups)
        if (g.label != target_group)
            others.push_back(&g.label);
    if (others.empty())
        throw ValidationError("no group other than '" + target_group + "'");
    return *others[rng.below(others.size())];
}

Cutout scale_for_canvas(const Cutout& cutout, Size canvas_size, double ratio) {
    if (cutout.pixels.empty() || canvas_size.area() == 0)
        throw ValidationError("cannot scale an empty cutout or onto an empty canvas");
    const double rw = static_cast<double>(cutout.pixels.width()) / canvas_size.width;
    const double rh = static_cast<double>(cutout.pixels.height()) / canvas_size.height;
    const double k = ratio / std::max(rw, rh);
    const double w = k * cutout.pixels.width();
    const double h = k * cutout.pixels.height();
    if (w < 1.0 || h < 1.0)
        throw ValidationError("scaled cutout '" + cutout.id + "' would be smaller than one pixel");

    const Size target{std::max(1, static_cast<int>(std::lround(w))), std::max(1, static_cast<int>(std::lround(h)))};
    Cutout out = cutout;
    if (target == cutout.pixels.size())
        return out;
    out.pixels = resize_bilinear(cutout.pixels, target);
    out.alpha = resize_nearest(cutout.alpha, target);
    return out;
}

Point footprint_origin(Placement anchor, Size size) { return {anchor.x - size.width / 2, anchor.y - size.height / 2}; }

std::optional<Placement> sample_placement(const BinaryMask& canvas_mask, Size footprint_size, Rng& rng) {
    const int w = canvas_mask.width(), h = canvas_mask.height();
    if (footprint_size.width > w || footprint_size.height > h)
        return std::nullopt;
    // The box [x - fw/2, x - fw/2 + fw) must stay inside [0, w).
    const int x_lo = footprint_size.width / 2, x_hi = w - footprint_size.width + footprint_size.width / 2;
    const int y_lo = footprint_size.height / 2, y_hi = h - footprint_size.height + footprint_size.height / 2;
    std::vector<Placement> feasible;
    for (int y = y_lo; y <= y_hi; ++y)
        for (int x = x_lo; x <= x_hi; ++x)
            if (!canvas_mask.at(x, y))
                feasible.push_back({x, y});
    if (feasible.empty())
        return std::nullopt;
    return feasible[rng.below(feasible.size())];
}

Composite composite(const RgbImage& canvas, const Cutout& cutout, Placement anchor, bool flip) {
    Composite out{canvas, BinaryMask(canvas.size())};
    const Size size = cutout.pixels.size();
    const Point origin = footprint_origin(anchor, size);
    for (int y = 0; y < size.height; ++y) {
        for (int x = 0; x < size.width; ++x) {
            const int sx = flip ? size.width - 1 - x : x;
            if (!cutout.alpha.at(sx, y))
                continue;
            const int cx = origin.x + x, cy = origin.y + y;
            if (!canvas.contains(cx, cy))
                continue;
            out.footprint.set(cx, cy);
            for (int c = 0; c < 3; ++c)
                out.image.at(cx, cy, c) = cutout.pixels.at(sx, y, c);
        }
    }
    return out;
}

BinaryMask synthesize_mask(const BinaryMask& canvas_mask, const BinaryMask& footprint) {
    if (canvas_mask.size() != footprint.size())
        throw ValidationError("mask and footprint dimensions differ");
    BinaryMask out = and_not(canvas_mask, footprint);
    if (!out.any())
        throw RuntimeError("pasted object covers the whole salient object");
    return out;
}

double occlusion_ratio(const BinaryMask& canvas_mask, const BinaryMask& footprint) {
    const auto total = canvas_mask.count();
    if (total == 0)
        throw ValidationError("occlusion ratio of an empty mask");
    return static_cast<double>(intersection_count(canvas_mask, footprint)) / static_cast<double>(total);
}

std::string synthesized_id(const std::string& canvas_id, int sample_index, int attempt) {
    return canvas_id + "_s" + std::to_string(sample_index) + "_a" + std::to_string(attempt);
}

std::string supplement_id(const std::string& source_id, int copy_index) {
    return source_id + "_sup" + std::to_string(copy_index);
}

SynthesizedSample synthesize_sample(const ImageSample& canvas, const GroupedCorpus& corpus, const CutoutIndex& cutouts,
                                    const SynthesisConfig& cfg, int sample_index, int attempt) {
    if (corpus.z() < 2)
        throw ValidationError("counterfactual source impossible: corpus has a single group");
    if (canvas.image.size() != canvas.mask.size() || !canvas.mask.any())
        throw ValidationError("canvas '" + canvas.id + "' is not a valid sample");

    SynthesizedSample out;
    out.canvas_id = canvas.id;
    out.sample_index = sample_index;
    out.attempt = attempt;
    out.seed = cfg.seed;
    out.sample.id = synthesized_id(canvas.id, sample_index, attempt);
    out.sample.label = canvas.label;
    out.sample.group_id = canvas.group();
    out.sample.origin = Origin::synthesized;

    Rng rng(derive_stream_seed(cfg.seed, canvas.id, sample_index, attempt));
    const Size canvas_size = canvas.image.size();

    for (int t = 1; t <= cfg.max_attempts; ++t) {
        out.tries = t;
        const std::string source_group = pick_source_group(corpus, canvas.group(), rng);
        const auto pool_it = cutouts.find(source_group);
        if (pool_it == cutouts.end() || pool_it->second.empty()) {
            out.reject_reason = "empty cutout pool";
            continue;
        }
        const Cutout& cutout = pool_it->second[rng.below(pool_it->second.size())];
        double ratio = rng.uniform(cfg.ratio_min, cfg.ratio_max);
        const bool flip = rng.bernoulli(cfg.flip_probability);

        std::optional<Placement> anchor;
        Cutout scaled;
        bool subpixel = false;
        for (;;) {
            try {
                scaled = scale_for_canvas(cutout, canvas_size, ratio);
            } catch (const ValidationError&) {
                subpixel = true;
                break;
            }
            anchor = sample_placement(canvas.mask, scaled.pixels.size(), rng);
            if (anchor || ratio <= cfg.ratio_min)
                break;
            ratio = std::max(ratio * cfg.shrink_factor, cfg.ratio_min);
        }
        if (!anchor) {
            out.reject_reason = subpixel ? "sub-pixel cutout" : "no feasible placement";
            continue;
        }

        Composite comp = composite(canvas.image, scaled, *anchor, flip);
        const double occlusion = occlusion_ratio(canvas.mask, comp.footprint);
        if (occlusion > cfg.occlusion_max) {
            out.reject_reason = "occlusion";
            continue;
        }

        out.sample.image = std::move(comp.image);
        out.sample.mask = synthesize_mask(canvas.mask, comp.footprint);
        out.edge = mask_to_edge(out.sample.mask, cfg.edge_thickness);
        out.footprint = std::move(comp.footprint);
        out.cutout_id = cutout.id;
        out.source_group = source_group;
        out.placement = *anchor;
        out.scale_ratio = ratio;
        out.flipped = flip;
        out.occlusion_ratio = occlusion;
        out.status = SampleStatus::pending;
        out.reject_reason.clear();
        return out;
    }
    out.status = SampleStatus::rejected;
    return out;
}

} // namespace gcp
