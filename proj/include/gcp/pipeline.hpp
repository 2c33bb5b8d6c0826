#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcp/corpus.hpp"
#include "gcp/grouping.hpp"
#include "gcp/paster.hpp"

namespace gcp {

/// Sources loaded, grouped and cut; everything synthesis needs.
struct PreparedCorpus {
    Manifest manifest;
    GroupingResult grouping;
    CutoutIndex cutouts;
    std::map<std::string, std::string> group_of; // id -> group label
    std::size_t incomplete_cutouts = 0;
    std::vector<std::string> invalid_ids;
};

struct PrepareOptions {
    std::size_t min_group_size = kDefaultMinGroupSize;
    ValidationPolicy validation;
    double border_tolerance = kDefaultBorderTolerance;
    int jobs = 1;
};

/// Loads every manifest sample, drops invalid ones, builds groups and the
/// cutout index. Throws ValidationError when z < 2.
PreparedCorpus prepare_corpus(const Manifest& manifest, const PrepareOptions& options);

struct RunReport {
    std::size_t canvases = 0;
    std::size_t groups = 0;
    std::size_t synthesized = 0;
    std::size_t rejected = 0;
    std::size_t supplements = 0;
    std::size_t resamples = 0;
    std::size_t emitted = 0;
    std::size_t invalid_sources = 0;
    std::size_t incomplete_cutouts = 0;
    std::map<std::string, std::size_t> rejection_reasons;
    std::map<std::string, std::size_t> per_group;
    std::map<std::string, std::size_t> per_origin;

    [[nodiscard]] double rejection_rate() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

struct PipelineOptions {
    SynthesisConfig synthesis;
    PrepareOptions prepare;
    WriteOptions write;
    int jobs = 1;
};

/// Synthesizes samples_per_canvas samples per canvas and supplement_factor
/// pass-through copies per source into out_dir. Also writes run.json so the
/// curation service can regenerate replacements.
RunReport run_pipeline(const std::filesystem::path& manifest_path, const std::filesystem::path& out_dir,
                       const PipelineOptions& options);

inline constexpr const char* kRunFile = "run.json";
inline constexpr const char* kReportFile = "report.json";

nlohmann::json config_to_json(const SynthesisConfig& cfg);
SynthesisConfig config_from_json(const nlohmann::json& j);

} // namespace gcp
