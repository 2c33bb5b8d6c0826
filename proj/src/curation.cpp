#include "gcp/curation.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <unordered_map>

#include <unistd.h>

#include <spdlog/spdlog.h>

#include "gcp/error.hpp"
#include "gcp/imaging.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gcp {

std::string_view to_string(Decision d) {
    switch (d) {
    case Decision::accept: return "accept";
    case Decision::reject: return "reject";
    case Decision::relabel: return "relabel";
    }
    return "accept";
}

Decision decision_from_string(std::string_view text) {
    if (text == "accept") return Decision::accept;
    if (text == "reject") return Decision::reject;
    if (text == "relabel") return Decision::relabel;
    throw ValidationError("unknown decision '" + std::string(text) + "' (expected accept, reject or relabel)");
}

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError("malformed " + path.string() + ": " + e.what());
    }
}

Verdict verdict_from_json(const json& j) {
    Verdict v;
    v.sample_id = j.at("sample_id").get<std::string>();
    v.decision = decision_from_string(j.at("decision").get<std::string>());
    v.reason = j.value("reason", std::string{});
    v.label = j.value("label", std::string{});
    v.reviewer = j.value("reviewer", std::string{});
    v.timestamp = j.value("timestamp", std::string{});
    return v;
}

} // namespace

CurationStore::CurationStore(fs::path dataset_dir, int jobs) : dir_(std::move(dataset_dir)) {
    const json run = read_json_file(dir_ / kRunFile);
    cfg_ = config_from_json(run.at("config"));
    PrepareOptions prep;
    prep.min_group_size = run.value("min_group_size", kDefaultMinGroupSize);
    prep.validation.min_foreground = run.value("min_foreground", prep.validation.min_foreground);
    prep.validation.max_foreground = run.value("max_foreground", prep.validation.max_foreground);
    prep.border_tolerance = cfg_.border_tolerance;
    prep.jobs = jobs;
    corpus_ = prepare_corpus(load_manifest(run.at("manifest").get<std::string>()), prep);

    std::ifstream meta(dir_ / "metadata.jsonl");
    if (!meta)
        throw IoError("no metadata.jsonl in " + dir_.string());
    std::string line;
    while (std::getline(meta, line)) {
        if (line.empty())
            continue;
        json rec = json::parse(line);
        Entry e;
        e.origin = origin_from_string(rec.value("origin", std::string{"source"}));
        e.group = rec.value("group", rec.value("label", std::string{}));
        e.status = status_from_string(rec.value("status", std::string{"accepted"}));
        e.record = std::move(rec);
        const std::string id = e.record.at("id").get<std::string>();
        entries_.emplace(id, std::move(e));
    }

    const fs::path log_path = dir_ / kVerdictLog;
    if (std::ifstream log{log_path}) {
        std::size_t line_no = 0;
        while (std::getline(log, line)) {
            ++line_no;
            if (line.empty())
                continue;
            Verdict v;
            try {
                v = verdict_from_json(json::parse(line));
            } catch (const std::exception& e) {
                // A torn final write from a crash; everything before it is intact.
                spdlog::warn("ignoring unreadable verdict log line {}: {}", line_no, e.what());
                continue;
            }
            try {
                apply_locked(v, true);
                ++replayed_;
            } catch (const ValidationError& e) {
                spdlog::warn("ignoring verdict log line {}: {}", line_no, e.what());
            }
        }
    }
    log_ = std::fopen(log_path.c_str(), "a");
    if (!log_)
        throw IoError("cannot open verdict log " + log_path.string() + ": " + std::strerror(errno));
}

CurationStore::~CurationStore() {
    if (log_)
        std::fclose(log_);
}

const CurationStore::Entry& CurationStore::entry(const std::string& id) const {
    auto it = entries_.find(id);
    if (it == entries_.end())
        throw NotFoundError("unknown sample id '" + id + "'");
    return it->second;
}

fs::path CurationStore::file_of(const Entry& e, std::string_view key) const {
    auto it = e.record.find(std::string(key));
    if (it == e.record.end() || !it->is_string())
        throw NotFoundError("sample '" + e.record.at("id").get<std::string>() + "' has no " + std::string(key));
    return dir_ / it->get<std::string>();
}

void CurationStore::append_log(const Verdict& v, const Entry& e) {
    json j{{"sample_id", v.sample_id}, {"decision", to_string(v.decision)}, {"timestamp", v.timestamp}};
    if (!v.reason.empty())
        j["reason"] = v.reason;
    if (!v.label.empty())
        j["label"] = v.label;
    if (!v.reviewer.empty())
        j["reviewer"] = v.reviewer;
    if (auto c = e.record.find("canvas_id"); c != e.record.end())
        j["canvas_id"] = *c;
    const std::string line = j.dump() + '\n';
    if (std::fwrite(line.data(), 1, line.size(), log_) != line.size() || std::fflush(log_) != 0 ||
        ::fsync(::fileno(log_)) != 0)
        throw IoError("cannot append to verdict log: " + std::string(std::strerror(errno)));
}

SynthesizedSample CurationStore::regenerate(const Entry& e) const {
    const std::string canvas_id = e.record.at("canvas_id").get<std::string>();
    const auto* rec = corpus_.manifest.find(canvas_id);
    const auto group = corpus_.group_of.find(canvas_id);
    if (!rec || group == corpus_.group_of.end())
        throw RuntimeError("canvas '" + canvas_id + "' is no longer part of the corpus");
    ImageSample canvas = load_sample(*rec);
    canvas.group_id = group->second;
    return synthesize_sample(canvas, corpus_.grouping.corpus, corpus_.cutouts, cfg_,
                             e.record.at("sample_index").get<int>(), e.record.at("attempt").get<int>());
}

std::string CurationStore::make_replacement(const Entry& rejected) {
    Entry probe;
    probe.record = rejected.record;
    probe.record["attempt"] = rejected.record.at("attempt").get<int>() + 1;
    SynthesizedSample s = regenerate(probe);
    if (s.status != SampleStatus::rejected)
        write_sample_files(dir_, s.sample, s.edge);
    ++resynthesized_;

    Entry e;
    e.record = metadata_record(s);
    e.group = s.sample.group();
    e.origin = Origin::synthesized;
    e.status = s.status;
    entries_[s.sample.id] = std::move(e);
    return s.sample.id;
}

VerdictOutcome CurationStore::apply_locked(const Verdict& v, bool replaying) {
    auto it = entries_.find(v.sample_id);
    if (it == entries_.end())
        throw NotFoundError("unknown sample id '" + v.sample_id + "'");
    if (it->second.origin != Origin::synthesized)
        throw ValidationError("sample '" + v.sample_id + "' is not a synthesized candidate");
    if (v.decision == Decision::relabel && v.label.empty())
        throw ValidationError("relabel verdict needs a label");

    Entry& e = it->second;
    const std::string canvas_id = e.record.value("canvas_id", std::string{});
    VerdictOutcome out;
    const SampleStatus target = v.decision == Decision::accept ? SampleStatus::accepted : SampleStatus::rejected;
    const bool same_label = v.decision != Decision::relabel ||
                            (overrides_.count(canvas_id) && overrides_.at(canvas_id) == v.label);
    if (e.status == target && same_label) {
        out.status = e.status;
        out.replacement_id = e.replacement_id;
        return out;
    }

    if (!replaying) {
        Verdict stamped = v;
        if (stamped.timestamp.empty())
            stamped.timestamp = utc_now();
        append_log(stamped, e);
    }

    e.status = target;
    if (v.decision == Decision::relabel)
        overrides_[canvas_id] = v.label;
    if (v.decision == Decision::reject && !e.replacement_id) {
        const std::string rid = make_replacement(e);
        entries_.at(v.sample_id).replacement_id = rid;
    }
    const Entry& updated = entries_.at(v.sample_id);
    out.status = updated.status;
    out.replacement_id = updated.replacement_id;
    out.changed = true;
    return out;
}

VerdictOutcome CurationStore::apply_verdict(Verdict verdict) {
    std::unique_lock lock(mutex_);
    return apply_locked(verdict, false);
}

std::vector<json> CurationStore::next_candidates(const std::optional<std::string>& group, std::size_t page,
                                                 std::size_t page_size) const {
    std::shared_lock lock(mutex_);
    if (group && !corpus_.grouping.corpus.find(*group))
        throw NotFoundError("unknown group '" + *group + "'");
    std::vector<std::pair<const std::string*, const std::string*>> pending; // (group, id)
    for (const auto& [id, e] : entries_)
        if (e.origin == Origin::synthesized && e.status == SampleStatus::pending && (!group || e.group == *group))
            pending.emplace_back(&e.group, &id);
    std::sort(pending.begin(), pending.end(), [](const auto& a, const auto& b) {
        return *a.first != *b.first ? *a.first < *b.first : *a.second < *b.second;
    });

    std::vector<json> out;
    const std::size_t begin = page * page_size;
    for (std::size_t i = begin; i < pending.size() && i < begin + page_size; ++i) {
        const std::string& id = *pending[i].second;
        const Entry& e = entries_.at(id);
        const std::string base = "/api/sample/" + id;
        out.push_back(json{{"id", id},
                           {"group", e.group},
                           {"occlusion_ratio", e.record.value("occlusion_ratio", 0.0)},
                           {"attempt", e.record.value("attempt", 0)},
                           {"canvas_id", e.record.value("canvas_id", std::string{})},
                           {"provenance", e.record},
                           {"image", base + "/image"},
                           {"mask", base + "/mask"},
                           {"overlay", base + "/overlay"}});
    }
    return out;
}

json CurationStore::groups() const {
    std::shared_lock lock(mutex_);
    std::map<std::string, std::array<std::size_t, 3>> counts;
    for (const auto& g : corpus_.grouping.corpus.groups)
        counts[g.label] = {0, 0, 0};
    for (const auto& [id, e] : entries_)
        if (e.origin == Origin::synthesized)
            ++counts[e.group][static_cast<std::size_t>(e.status)];
    json out = json::array();
    for (const auto& [label, c] : counts)
        out.push_back({{"label", label}, {"pending", c[0]}, {"accepted", c[1]}, {"rejected", c[2]}});
    return out;
}

json CurationStore::stats() const {
    std::shared_lock lock(mutex_);
    std::size_t pending = 0, accepted = 0, rejected = 0, supplements = 0, replacements = 0;
    for (const auto& [id, e] : entries_) {
        if (e.origin == Origin::supplement) {
            ++supplements;
            continue;
        }
        if (e.origin != Origin::synthesized)
            continue;
        if (e.record.value("attempt", 0) > 0)
            ++replacements;
        switch (e.status) {
        case SampleStatus::pending: ++pending; break;
        case SampleStatus::accepted: ++accepted; break;
        case SampleStatus::rejected: ++rejected; break;
        }
    }
    const std::size_t reviewed = accepted + rejected;
    json report = json::object();
    if (std::ifstream f{dir_ / kReportFile})
        report = json::parse(f, nullptr, false);
    return json{{"pending", pending},
                {"accepted", accepted},
                {"rejected", rejected},
                {"supplements", supplements},
                {"replacements", replacements},
                {"rejection_rate", reviewed == 0 ? 0.0 : static_cast<double>(rejected) / static_cast<double>(reviewed)},
                {"replayed_verdicts", replayed_},
                {"label_overrides", overrides_},
                {"run", report}};
}

std::optional<SampleStatus> CurationStore::status(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(id);
    if (it == entries_.end())
        return std::nullopt;
    return it->second.status;
}

std::map<std::string, SampleStatus> CurationStore::statuses() const {
    std::shared_lock lock(mutex_);
    std::map<std::string, SampleStatus> out;
    for (const auto& [id, e] : entries_)
        if (e.origin == Origin::synthesized)
            out.emplace(id, e.status);
    return out;
}

std::map<std::string, std::string> CurationStore::replacements() const {
    std::shared_lock lock(mutex_);
    std::map<std::string, std::string> out;
    for (const auto& [id, e] : entries_)
        if (e.replacement_id)
            out.emplace(id, *e.replacement_id);
    return out;
}

std::map<std::string, std::string> CurationStore::label_overrides() const {
    std::shared_lock lock(mutex_);
    return overrides_;
}

RgbImage CurationStore::image(const std::string& id) const {
    std::shared_lock lock(mutex_);
    return read_rgb(file_of(entry(id), "image_path"));
}

GrayImage CurationStore::mask(const std::string& id) const {
    std::shared_lock lock(mutex_);
    return read_gray(file_of(entry(id), "mask_path"));
}

RgbImage CurationStore::overlay(const std::string& id) const {
    std::shared_lock lock(mutex_);
    const Entry& e = entry(id);
    RgbImage img = read_rgb(file_of(e, "image_path"));
    const BinaryMask m = BinaryMask::from_gray(read_gray(file_of(e, "mask_path")));

    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            if (m.contains(x, y) && m.at(x, y)) {
                img.at(x, y, 0) = static_cast<std::uint8_t>(img.at(x, y, 0) / 2);
                img.at(x, y, 1) = static_cast<std::uint8_t>(img.at(x, y, 1) / 2 + 127);
                img.at(x, y, 2) = static_cast<std::uint8_t>(img.at(x, y, 2) / 2);
            }
    if (e.origin == Origin::synthesized) {
        const SynthesizedSample s = regenerate(e);
        if (s.sample.id == id && s.footprint.size() == img.size() && s.footprint.any()) {
            const BinaryMask outline = mask_to_edge(s.footprint);
            for (int y = 0; y < img.height(); ++y)
                for (int x = 0; x < img.width(); ++x)
                    if (outline.at(x, y)) {
                        img.at(x, y, 0) = 255;
                        img.at(x, y, 1) = 0;
                        img.at(x, y, 2) = 0;
                    }
        }
    }
    return img;
}

WriteReport CurationStore::export_to(const fs::path& out_dir) const {
    std::shared_lock lock(mutex_);
    DatasetWriter writer(out_dir);
    for (const auto& [id, e] : entries_) {
        const bool keep = e.origin == Origin::supplement ||
                          (e.origin == Origin::synthesized && e.status == SampleStatus::accepted);
        if (!keep)
            continue;
        json rec = e.record;
        if (e.origin == Origin::synthesized)
            rec["status"] = to_string(SampleStatus::accepted);
        for (const char* key : {"image_path", "mask_path", "edge_path"}) {
            const fs::path src = dir_ / rec.at(key).get<std::string>();
            const fs::path dst = out_dir / rec.at(key).get<std::string>();
            fs::create_directories(dst.parent_path());
            fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
        }
        writer.append_record(rec);
    }
    return writer.finish();
}

} // namespace gcp
