#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gcp/corpus.hpp"
#include "gcp/cutter.hpp"
#include "gcp/grouping.hpp"
#include "gcp/rng.hpp"

namespace gcp {

struct SynthesisConfig {
    double ratio_min = 0.1;
    double ratio_max = 0.8;
    double flip_probability = 0.5;
    double occlusion_max = 0.05;
    int max_attempts = 10;
    int samples_per_canvas = 2;
    int supplement_factor = 2;
    std::uint64_t seed = 0;
    double border_tolerance = kDefaultBorderTolerance;
    int edge_thickness = 1;
    double shrink_factor = 0.9;

    /// Throws ValidationError naming the first violated constraint.
    void validate() const;
};

/// Complete cutouts keyed by group label.
using CutoutIndex = std::map<std::string, std::vector<Cutout>>;

/// Uniform over the z - 1 groups other than target_group.
std::string pick_source_group(const GroupedCorpus& corpus, const std::string& target_group, Rng& rng);

/// Resamples (bilinear pixels, nearest alpha) keeping the aspect ratio so
/// that max(w_o / w, h_o / h) == ratio.
Cutout scale_for_canvas(const Cutout& cutout, Size canvas_size, double ratio);

/// Uniform over background pixels whose centred footprint box lies fully
/// inside the canvas. nullopt when no such pixel exists.
std::optional<Placement> sample_placement(const BinaryMask& canvas_mask, Size footprint_size, Rng& rng);

/// Top-left corner of a footprint box of `size` anchored at its centre.
Point footprint_origin(Placement anchor, Size size);

struct Composite {
    RgbImage image;
    BinaryMask footprint;
};

Composite composite(const RgbImage& canvas, const Cutout& cutout, Placement anchor, bool flip);

/// M AND NOT footprint; throws when nothing of M survives.
BinaryMask synthesize_mask(const BinaryMask& canvas_mask, const BinaryMask& footprint);

/// |M ∩ footprint| / |M|.
double occlusion_ratio(const BinaryMask& canvas_mask, const BinaryMask& footprint);

/// Draws one counterfactual sample for (canvas, sample_index, attempt).
/// QC failures re-draw every stochastic choice from the same stream up to
/// cfg.max_attempts times; after that the sample comes back rejected.
SynthesizedSample synthesize_sample(const ImageSample& canvas, const GroupedCorpus& corpus,
                                    const CutoutIndex& cutouts, const SynthesisConfig& cfg,
                                    int sample_index, int attempt = 0);

/// Deterministic sample id for a synthesis slot.
std::string synthesized_id(const std::string& canvas_id, int sample_index, int attempt);
std::string supplement_id(const std::string& source_id, int copy_index);

} // namespace gcp
