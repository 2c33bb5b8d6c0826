#include "gcp/pipeline.hpp"

#include <fstream>
#include <mutex>
#include <set>

#include <spdlog/spdlog.h>

#include "gcp/cutter.hpp"
#include "gcp/error.hpp"
#include "gcp/parallel.hpp"
#include "gcp/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gcp {

PreparedCorpus prepare_corpus(const Manifest& manifest, const PrepareOptions& options) {
    const std::size_t n = manifest.records.size();
    std::vector<std::vector<Violation>> violations(n);
    std::vector<std::optional<Cutout>> cut(n);

    parallel_for(n, options.jobs, [&](std::size_t i) {
        const ImageSample sample = load_sample(manifest.records[i]);
        violations[i] = validate_sample(sample, options.validation);
        if (!violations[i].empty())
            return;
        CutResult r = cut_largest(sample, options.border_tolerance);
        cut[i] = std::move(r.cutout);
    });

    PreparedCorpus out;
    out.manifest.root = manifest.root;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& rec = manifest.records[i];
        if (!violations[i].empty()) {
            std::string what;
            for (auto v : violations[i])
                what += (what.empty() ? "" : ", ") + std::string(to_string(v));
            spdlog::warn("skipping '{}': {}", rec.id, what);
            out.invalid_ids.push_back(rec.id);
            continue;
        }
        out.manifest.records.push_back(rec);
    }

    out.grouping = build_groups(out.manifest, options.min_group_size);
    const auto& corpus = out.grouping.corpus;
    if (corpus.z() < 2)
        throw ValidationError("counterfactual source impossible: only one group ('" + corpus.groups.front().label +
                              "') survives grouping");

    for (const auto& g : corpus.groups) {
        out.cutouts[g.label];
        for (const auto& id : g.member_ids)
            out.group_of[id] = g.label;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!cut[i])
            continue;
        auto it = out.group_of.find(manifest.records[i].id);
        if (it == out.group_of.end())
            continue;
        if (!cut[i]->complete) {
            ++out.incomplete_cutouts;
            continue;
        }
        out.cutouts[it->second].push_back(std::move(*cut[i]));
    }
    return out;
}

double RunReport::rejection_rate() const {
    const auto attempted = synthesized + rejected;
    return attempted == 0 ? 0.0 : static_cast<double>(rejected) / static_cast<double>(attempted);
}

json RunReport::to_json() const {
    return json{{"canvases", canvases},
                {"groups", groups},
                {"synthesized", synthesized},
                {"rejected", rejected},
                {"supplements", supplements},
                {"resamples", resamples},
                {"emitted", emitted},
                {"invalid_sources", invalid_sources},
                {"incomplete_cutouts", incomplete_cutouts},
                {"rejection_rate", rejection_rate()},
                {"rejection_reasons", rejection_reasons},
                {"per_group", per_group},
                {"per_origin", per_origin}};
}

json config_to_json(const SynthesisConfig& c) {
    return json{{"ratio_min", c.ratio_min},
                {"ratio_max", c.ratio_max},
                {"flip_probability", c.flip_probability},
                {"occlusion_max", c.occlusion_max},
                {"max_attempts", c.max_attempts},
                {"samples_per_canvas", c.samples_per_canvas},
                {"supplement_factor", c.supplement_factor},
                {"seed", c.seed},
                {"border_tolerance", c.border_tolerance},
                {"edge_thickness", c.edge_thickness},
                {"shrink_factor", c.shrink_factor}};
}

SynthesisConfig config_from_json(const json& j) {
    SynthesisConfig c;
    c.ratio_min = j.value("ratio_min", c.ratio_min);
    c.ratio_max = j.value("ratio_max", c.ratio_max);
    c.flip_probability = j.value("flip_probability", c.flip_probability);
    c.occlusion_max = j.value("occlusion_max", c.occlusion_max);
    c.max_attempts = j.value("max_attempts", c.max_attempts);
    c.samples_per_canvas = j.value("samples_per_canvas", c.samples_per_canvas);
    c.supplement_factor = j.value("supplement_factor", c.supplement_factor);
    c.seed = j.value("seed", c.seed);
    c.border_tolerance = j.value("border_tolerance", c.border_tolerance);
    c.edge_thickness = j.value("edge_thickness", c.edge_thickness);
    c.shrink_factor = j.value("shrink_factor", c.shrink_factor);
    return c;
}

namespace {

struct CanvasResult {
    std::vector<SynthesizedSample> synthesized;
    std::vector<ImageSample> supplements;
};

// Metadata only needs provenance; drop rasters once they are on disk.
void strip_rasters(SynthesizedSample& s) {
    s.sample.image = {};
    s.sample.mask = {};
    s.edge = {};
    s.footprint = {};
}

} // namespace

RunReport run_pipeline(const fs::path& manifest_path, const fs::path& out_dir, const PipelineOptions& options) {
    const SynthesisConfig& cfg = options.synthesis;
    cfg.validate();

    const Manifest manifest = load_manifest(manifest_path);
    PrepareOptions prep = options.prepare;
    prep.border_tolerance = cfg.border_tolerance;
    prep.jobs = options.jobs;
    const PreparedCorpus prepared = prepare_corpus(manifest, prep);
    const GroupedCorpus& corpus = prepared.grouping.corpus;

    WriteOptions wopts = options.write;
    wopts.edge_thickness = cfg.edge_thickness;
    DatasetWriter writer(out_dir, wopts);

    {
        json run{{"format_version", kFormatVersion},
                 {"toolkit_version", kToolkitVersion},
                 {"manifest", fs::absolute(manifest_path).lexically_normal().string()},
                 {"config", config_to_json(cfg)},
                 {"min_group_size", prep.min_group_size},
                 {"min_foreground", prep.validation.min_foreground},
                 {"max_foreground", prep.validation.max_foreground}};
        std::ofstream f(out_dir / kRunFile, std::ios::trunc);
        f << run.dump(2) << '\n';
        if (!f)
            throw IoError("cannot write " + (out_dir / kRunFile).string());
    }

    const auto& canvases = prepared.manifest.records;
    RunReport report;
    report.groups = corpus.z();
    report.invalid_sources = prepared.invalid_ids.size();
    report.incomplete_cutouts = prepared.incomplete_cutouts;

    const std::size_t batch = std::max<std::size_t>(16, static_cast<std::size_t>(std::max(options.jobs, 1)) * 4);
    for (std::size_t begin = 0; begin < canvases.size(); begin += batch) {
        const std::size_t end = std::min(canvases.size(), begin + batch);
        std::vector<CanvasResult> results(end - begin);
        parallel_for(end - begin, options.jobs, [&](std::size_t k) {
            const auto& rec = canvases[begin + k];
            const auto group = prepared.group_of.find(rec.id);
            if (group == prepared.group_of.end())
                return;
            ImageSample canvas = load_sample(rec);
            canvas.group_id = group->second;
            canvas.origin = Origin::source;

            auto& r = results[k];
            for (int i = 0; i < cfg.samples_per_canvas; ++i) {
                SynthesizedSample s = synthesize_sample(canvas, corpus, prepared.cutouts, cfg, i, 0);
                if (s.status != SampleStatus::rejected)
                    writer.write_files(s.sample, s.edge);
                strip_rasters(s);
                r.synthesized.push_back(std::move(s));
            }
            if (cfg.supplement_factor > 0) {
                const BinaryMask edge = mask_to_edge(canvas.mask, cfg.edge_thickness);
                for (int c = 0; c < cfg.supplement_factor; ++c) {
                    ImageSample copy = canvas;
                    copy.id = supplement_id(canvas.id, c);
                    copy.origin = Origin::supplement;
                    writer.write_files(copy, edge);
                    copy.image = {};
                    copy.mask = {};
                    r.supplements.push_back(std::move(copy));
                }
            }
        });

        for (auto& r : results) {
            if (r.synthesized.empty() && r.supplements.empty())
                continue;
            ++report.canvases;
            for (const auto& s : r.synthesized) {
                writer.append(s);
                report.resamples += static_cast<std::size_t>(s.tries - 1);
                if (s.status == SampleStatus::rejected) {
                    ++report.rejected;
                    ++report.rejection_reasons[s.reject_reason];
                } else {
                    ++report.synthesized;
                }
            }
            for (const auto& s : r.supplements) {
                writer.append(s, cfg.seed);
                ++report.supplements;
            }
        }
    }

    const WriteReport written = writer.finish();
    report.emitted = written.written;
    report.per_group = written.per_group;
    report.per_origin = written.per_origin;

    std::ofstream f(out_dir / kReportFile, std::ios::trunc);
    f << report.to_json().dump(2) << '\n';
    if (!f)
        throw IoError("cannot write " + (out_dir / kReportFile).string());
    return report;
}

} // namespace gcp
