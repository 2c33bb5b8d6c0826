#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcp/raster.hpp"

namespace gcp {

enum class Origin { source, synthesized, supplement };

std::string_view to_string(Origin origin);
Origin origin_from_string(std::string_view text);

/// One (image, mask, label) triple.
struct ImageSample {
    std::string id;
    RgbImage image;
    BinaryMask mask;
    std::string label;
    std::optional<std::string> group_id;
    Origin origin = Origin::source;

    [[nodiscard]] const std::string& group() const { return group_id ? *group_id : label; }
};

struct ManifestRecord {
    std::string id;
    std::filesystem::path image_path; // resolved against the manifest directory
    std::filesystem::path mask_path;
    std::string label;
    Origin origin = Origin::source;
    std::optional<double> confidence; // set when the label came from a classifier
};

struct Manifest {
    std::filesystem::path root;
    std::vector<ManifestRecord> records;

    [[nodiscard]] std::size_t size() const { return records.size(); }
    [[nodiscard]] const ManifestRecord* find(std::string_view id) const;
};

/// Reads newline-delimited JSON records. Blank lines are skipped; any
/// other malformed line is reported with its 1-based line number.
Manifest load_manifest(const std::filesystem::path& path);

/// Writes the manifest with paths relative to the file's directory.
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Loads and binarizes the raster pair of a record. Dimension mismatches are
/// left for validate_sample to report.
ImageSample load_sample(const ManifestRecord& record);

enum class Violation {
    dimension_mismatch,
    empty_mask,
    foreground_too_small,
    foreground_too_large,
    empty_label,
};

std::string_view to_string(Violation v);

struct ValidationPolicy {
    double min_foreground = 0.005;
    double max_foreground = 0.95;
};

std::vector<Violation> validate_sample(const ImageSample& sample, const ValidationPolicy& policy = {});

/// Inner 8-connected boundary of the mask, grown inward by thickness - 1
/// dilation passes clipped to the mask. Pixels outside the frame count as
/// background.
BinaryMask mask_to_edge(const BinaryMask& mask, int thickness = 1);

enum class SampleStatus { pending, accepted, rejected };

std::string_view to_string(SampleStatus status);
SampleStatus status_from_string(std::string_view text);

struct Placement {
    int x = 0;
    int y = 0;
    friend bool operator==(const Placement&, const Placement&) = default;
};

/// A composite produced by the paste step, with everything needed to audit
/// or reproduce it.
struct SynthesizedSample {
    ImageSample sample; // origin = synthesized, label = canvas label
    BinaryMask edge;
    std::string canvas_id;
    std::string cutout_id;
    std::string source_group;
    int sample_index = 0;
    int attempt = 0;
    int tries = 0; // QC draws consumed inside this attempt stream
    Placement placement;
    double scale_ratio = 0.0;
    bool flipped = false;
    BinaryMask footprint;
    double occlusion_ratio = 0.0;
    SampleStatus status = SampleStatus::pending;
    std::string reject_reason;
    std::uint64_t seed = 0;
};

struct WriteOptions {
    bool overwrite = false;
    int edge_thickness = 1;
};

struct WriteReport {
    std::size_t written = 0;
    std::size_t rejected = 0;
    std::map<std::string, std::size_t> per_group;
    std::map<std::string, std::size_t> per_origin;
};

/// Streaming writer for the on-disk layout:
///   <out>/<group>/<id>.png, <id>_mask.png, <id>_edge.png
///   <out>/metadata.jsonl   one record per emitted sample, in write order
///   <out>/rejected.jsonl   provenance of synthesis attempts that never passed QC
/// Raster files of distinct samples may be written from several threads via
/// write_files(); records are appended in the order the caller chooses.
class DatasetWriter {
public:
    DatasetWriter(std::filesystem::path out_dir, WriteOptions options = {});
    ~DatasetWriter();
    DatasetWriter(const DatasetWriter&) = delete;
    DatasetWriter& operator=(const DatasetWriter&) = delete;

    /// Writes the three rasters of an emitted sample; thread-safe across ids.
    void write_files(const ImageSample& sample, const BinaryMask& edge) const;

    void append(const SynthesizedSample& sample);
    void append(const ImageSample& sample, std::optional<std::uint64_t> seed);
    /// Appends an already-built metadata record (used when re-exporting).
    void append_record(const nlohmann::json& record);

    const std::filesystem::path& out_dir() const { return out_dir_; }
    WriteReport finish();

private:
    void count(const ImageSample& sample);

    std::filesystem::path out_dir_;
    WriteOptions options_;
    std::ofstream metadata_;
    std::ofstream rejected_;
    WriteReport report_;
    bool finished_ = false;
};

/// Writes <out>/<group>/<id>{,_mask,_edge}.png, replacing existing files.
void write_sample_files(const std::filesystem::path& out_dir, const ImageSample& sample, const BinaryMask& edge);

/// Provenance record of a sample as stored in metadata.jsonl.
nlohmann::json metadata_record(const SynthesizedSample& sample);
nlohmann::json metadata_record(const ImageSample& sample, std::optional<std::uint64_t> seed);

/// Convenience wrapper: writes everything in one go.
WriteReport write_dataset(const std::vector<SynthesizedSample>& synthesized,
                          const std::vector<ImageSample>& plain,
                          const std::filesystem::path& out_dir,
                          const WriteOptions& options = {},
                          std::optional<std::uint64_t> seed = std::nullopt);

} // namespace gcp
