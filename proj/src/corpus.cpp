#include "gcp/corpus.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "gcp/error.hpp"
#include "gcp/imaging.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gcp {

std::string_view to_string(Origin origin) {
    switch (origin) {
    case Origin::source: return "source";
    case Origin::synthesized: return "synthesized";
    case Origin::supplement: return "supplement";
    }
    return "source";
}

Origin origin_from_string(std::string_view text) {
    if (text == "source") return Origin::source;
    if (text == "synthesized") return Origin::synthesized;
    if (text == "supplement") return Origin::supplement;
    throw ValidationError("unknown origin '" + std::string(text) + "'");
}

std::string_view to_string(SampleStatus status) {
    switch (status) {
    case SampleStatus::pending: return "pending";
    case SampleStatus::accepted: return "accepted";
    case SampleStatus::rejected: return "rejected";
    }
    return "pending";
}

SampleStatus status_from_string(std::string_view text) {
    if (text == "pending") return SampleStatus::pending;
    if (text == "accepted") return SampleStatus::accepted;
    if (text == "rejected") return SampleStatus::rejected;
    throw ValidationError("unknown status '" + std::string(text) + "'");
}

std::string_view to_string(Violation v) {
    switch (v) {
    case Violation::dimension_mismatch: return "dimension-mismatch";
    case Violation::empty_mask: return "empty-mask";
    case Violation::foreground_too_small: return "foreground-too-small";
    case Violation::foreground_too_large: return "foreground-too-large";
    case Violation::empty_label: return "empty-label";
    }
    return "unknown";
}

const ManifestRecord* Manifest::find(std::string_view id) const {
    auto it = std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.id == id; });
    return it == records.end() ? nullptr : &*it;
}

namespace {

std::string required_string(const json& j, const char* key, std::size_t line) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        throw ValidationError("manifest line " + std::to_string(line) + ": missing string field '" + key + "'");
    return it->get<std::string>();
}

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

} // namespace

Manifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open manifest " + path.string());

    Manifest manifest;
    manifest.root = path.parent_path();
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line))
            continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object())
            throw ValidationError("manifest line " + std::to_string(line_no) + ": expected an object");

        ManifestRecord r;
        r.id = required_string(j, "id", line_no);
        r.image_path = manifest.root / required_string(j, "image_path", line_no);
        r.mask_path = manifest.root / required_string(j, "mask_path", line_no);
        r.label = required_string(j, "label", line_no);
        if (auto it = j.find("origin"); it != j.end() && it->is_string())
            r.origin = origin_from_string(it->get<std::string>());
        if (auto it = j.find("confidence"); it != j.end() && it->is_number())
            r.confidence = it->get<double>();

        if (r.id.empty())
            throw ValidationError("manifest line " + std::to_string(line_no) + ": empty id");
        if (!seen.insert(r.id).second)
            throw ValidationError("manifest line " + std::to_string(line_no) + ": duplicate id '" + r.id + "'");
        for (const auto& p : {r.image_path, r.mask_path})
            if (!fs::exists(p))
                throw IoError("manifest line " + std::to_string(line_no) + ": path not found " + p.string());
        manifest.records.push_back(std::move(r));
    }
    if (manifest.records.empty())
        spdlog::warn("manifest {} has no records", path.string());
    return manifest;
}

void save_manifest(const Manifest& manifest, const fs::path& path) {
    const fs::path dir = fs::absolute(path).parent_path();
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot write manifest " + path.string());
    for (const auto& r : manifest.records) {
        json j{{"id", r.id},
               {"image_path", fs::relative(fs::absolute(r.image_path), dir).generic_string()},
               {"mask_path", fs::relative(fs::absolute(r.mask_path), dir).generic_string()},
               {"label", r.label}};
        if (r.origin != Origin::source)
            j["origin"] = to_string(r.origin);
        if (r.confidence)
            j["confidence"] = *r.confidence;
        out << j.dump() << '\n';
    }
    if (!out)
        throw IoError("cannot write manifest " + path.string());
}

ImageSample load_sample(const ManifestRecord& record) {
    ImageSample s;
    s.id = record.id;
    s.image = read_rgb(record.image_path);
    s.mask = BinaryMask::from_gray(read_gray(record.mask_path));
    s.label = record.label;
    s.origin = record.origin;
    return s;
}

std::vector<Violation> validate_sample(const ImageSample& sample, const ValidationPolicy& policy) {
    std::vector<Violation> out;
    if (sample.image.size() != sample.mask.size())
        out.push_back(Violation::dimension_mismatch);
    if (!sample.mask.any()) {
        out.push_back(Violation::empty_mask);
    } else if (sample.image.size() == sample.mask.size()) {
        const double f = sample.mask.fraction();
        if (f < policy.min_foreground)
            out.push_back(Violation::foreground_too_small);
        if (f > policy.max_foreground)
            out.push_back(Violation::foreground_too_large);
    }
    if (sample.label.empty())
        out.push_back(Violation::empty_label);
    return out;
}

BinaryMask mask_to_edge(const BinaryMask& mask, int thickness) {
    if (thickness < 1)
        throw ValidationError("edge thickness must be >= 1");
    if (!mask.any())
        throw ValidationError("cannot derive an edge map from an empty mask");

    BinaryMask edge(mask.size());
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.at(x, y))
                continue;
            bool boundary = false;
            for (int dy = -1; dy <= 1 && !boundary; ++dy)
                for (int dx = -1; dx <= 1 && !boundary; ++dx)
                    boundary = (dx || dy) && !mask.at_or_background(x + dx, y + dy);
            edge.set(x, y, boundary);
        }
    }
    for (int pass = 1; pass < thickness; ++pass) {
        BinaryMask grown = edge;
        for (int y = 0; y < edge.height(); ++y)
            for (int x = 0; x < edge.width(); ++x) {
                if (!edge.at(x, y))
                    continue;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx)
                        if (mask.at_or_background(x + dx, y + dy))
                            grown.set(x + dx, y + dy);
            }
        edge = std::move(grown);
    }
    return edge;
}

// ---------------------------------------------------------------------------
// Dataset writer

namespace {

fs::path relative_image(const ImageSample& s) { return fs::path(s.group()) / (s.id + ".png"); }
fs::path relative_mask(const ImageSample& s) { return fs::path(s.group()) / (s.id + "_mask.png"); }
fs::path relative_edge(const ImageSample& s) { return fs::path(s.group()) / (s.id + "_edge.png"); }

json base_record(const ImageSample& s) {
    return json{{"id", s.id},
                {"image_path", relative_image(s).generic_string()},
                {"mask_path", relative_mask(s).generic_string()},
                {"edge_path", relative_edge(s).generic_string()},
                {"label", s.label},
                {"group", s.group()},
                {"origin", to_string(s.origin)}};
}

} // namespace

json metadata_record(const ImageSample& sample, std::optional<std::uint64_t> seed) {
    json j = base_record(sample);
    j["canvas_id"] = nullptr;
    j["cutout_id"] = nullptr;
    j["placement"] = nullptr;
    j["scale"] = nullptr;
    j["flip"] = nullptr;
    j["occlusion_ratio"] = nullptr;
    j["seed"] = seed ? json(*seed) : json(nullptr);
    j["status"] = to_string(SampleStatus::accepted);
    return j;
}

json metadata_record(const SynthesizedSample& s) {
    json j = base_record(s.sample);
    j["canvas_id"] = s.canvas_id;
    j["cutout_id"] = s.cutout_id;
    j["source_group"] = s.source_group;
    j["sample_index"] = s.sample_index;
    j["attempt"] = s.attempt;
    j["tries"] = s.tries;
    j["placement"] = json::array({s.placement.x, s.placement.y});
    j["scale"] = s.scale_ratio;
    j["flip"] = s.flipped;
    j["occlusion_ratio"] = s.occlusion_ratio;
    j["seed"] = s.seed;
    j["status"] = to_string(s.status);
    if (s.status == SampleStatus::rejected) {
        j.erase("image_path");
        j.erase("mask_path");
        j.erase("edge_path");
        j["reason"] = s.reject_reason;
    }
    return j;
}

DatasetWriter::DatasetWriter(fs::path out_dir, WriteOptions options)
    : out_dir_(std::move(out_dir)), options_(options) {
    std::error_code ec;
    fs::create_directories(out_dir_, ec);
    if (ec)
        throw IoError("cannot create " + out_dir_.string() + ": " + ec.message());
    const auto meta = out_dir_ / "metadata.jsonl";
    if (fs::exists(meta) && !options_.overwrite)
        throw ValidationError("dataset already exists in " + out_dir_.string() + " (pass overwrite to replace it)");
    metadata_.open(meta, std::ios::trunc);
    rejected_.open(out_dir_ / "rejected.jsonl", std::ios::trunc);
    if (!metadata_ || !rejected_)
        throw IoError("cannot open metadata log in " + out_dir_.string());
}

DatasetWriter::~DatasetWriter() = default;

void write_sample_files(const fs::path& out_dir, const ImageSample& sample, const BinaryMask& edge) {
    const fs::path image = out_dir / relative_image(sample);
    std::error_code ec;
    fs::create_directories(image.parent_path(), ec);
    if (ec)
        throw IoError("cannot create " + image.parent_path().string() + ": " + ec.message());
    write_png(image, sample.image);
    write_png(out_dir / relative_mask(sample), sample.mask.to_gray());
    write_png(out_dir / relative_edge(sample), edge.to_gray());
}

void DatasetWriter::write_files(const ImageSample& sample, const BinaryMask& edge) const {
    if (!options_.overwrite && fs::exists(out_dir_ / relative_image(sample)))
        throw RuntimeError("sample id collision: " + sample.id + " already exists in " + out_dir_.string());
    write_sample_files(out_dir_, sample, edge);
}

void DatasetWriter::count(const ImageSample& sample) {
    ++report_.written;
    ++report_.per_group[sample.group()];
    ++report_.per_origin[std::string(to_string(sample.origin))];
}

void DatasetWriter::append(const SynthesizedSample& sample) {
    if (sample.status == SampleStatus::rejected) {
        rejected_ << metadata_record(sample).dump() << '\n';
        ++report_.rejected;
        return;
    }
    metadata_ << metadata_record(sample).dump() << '\n';
    count(sample.sample);
}

void DatasetWriter::append(const ImageSample& sample, std::optional<std::uint64_t> seed) {
    metadata_ << metadata_record(sample, seed).dump() << '\n';
    count(sample);
}

void DatasetWriter::append_record(const json& record) {
    metadata_ << record.dump() << '\n';
    ++report_.written;
    ++report_.per_group[record.value("group", record.value("label", std::string{}))];
    ++report_.per_origin[record.value("origin", std::string{"source"})];
}

WriteReport DatasetWriter::finish() {
    if (!finished_) {
        metadata_.flush();
        rejected_.flush();
        if (!metadata_ || !rejected_)
            throw IoError("failed writing metadata in " + out_dir_.string());
        metadata_.close();
        rejected_.close();
        finished_ = true;
    }
    return report_;
}

WriteReport write_dataset(const std::vector<SynthesizedSample>& synthesized, const std::vector<ImageSample>& plain,
                          const fs::path& out_dir, const WriteOptions& options, std::optional<std::uint64_t> seed) {
    DatasetWriter writer(out_dir, options);
    for (const auto& s : synthesized) {
        if (s.status != SampleStatus::rejected)
            writer.write_files(s.sample, s.edge);
        writer.append(s);
    }
    for (const auto& s : plain) {
        writer.write_files(s, mask_to_edge(s.mask, options.edge_thickness));
        writer.append(s, seed);
    }
    return writer.finish();
}

} // namespace gcp
