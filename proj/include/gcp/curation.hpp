#pragma once

#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcp/corpus.hpp"
#include "gcp/pipeline.hpp"

namespace gcp {

enum class Decision { accept, reject, relabel };

std::string_view to_string(Decision d);
Decision decision_from_string(std::string_view text);

struct Verdict {
    std::string sample_id;
    Decision decision = Decision::accept;
    std::string reason;
    std::string label; // relabel only
    std::string reviewer;
    std::string timestamp; // filled on append when empty
};

struct VerdictOutcome {
    SampleStatus status = SampleStatus::pending;
    std::optional<std::string> replacement_id;
    bool changed = false;
};

inline constexpr const char* kVerdictLog = "verdicts.jsonl";

/// Review state of a synthesized dataset. Statuses are never stored: they are
/// rebuilt from metadata.jsonl plus the append-only verdict log, and a
/// rejection regenerates its replacement from the run's seed.
class CurationStore {
public:
    explicit CurationStore(std::filesystem::path dataset_dir, int jobs = 1);
    ~CurationStore();
    CurationStore(const CurationStore&) = delete;
    CurationStore& operator=(const CurationStore&) = delete;

    /// Pending synthesized samples ordered by (group, id).
    std::vector<nlohmann::json> next_candidates(const std::optional<std::string>& group, std::size_t page,
                                                std::size_t page_size) const;

    VerdictOutcome apply_verdict(Verdict verdict);

    nlohmann::json groups() const;
    nlohmann::json stats() const;
    std::optional<SampleStatus> status(const std::string& id) const;
    /// id -> status for every synthesized sample, replacements included.
    std::map<std::string, SampleStatus> statuses() const;
    std::map<std::string, std::string> replacements() const;
    std::map<std::string, std::string> label_overrides() const;

    RgbImage image(const std::string& id) const;
    GrayImage mask(const std::string& id) const;
    /// Image with the mask tinted and the pasted footprint outlined.
    RgbImage overlay(const std::string& id) const;

    /// Copies accepted synthesized samples and all supplements to out_dir.
    WriteReport export_to(const std::filesystem::path& out_dir) const;

    const std::filesystem::path& dataset_dir() const { return dir_; }

private:
    struct Entry {
        nlohmann::json record;
        std::string group;
        Origin origin = Origin::synthesized;
        SampleStatus status = SampleStatus::pending;
        std::optional<std::string> replacement_id;
    };

    VerdictOutcome apply_locked(const Verdict& verdict, bool replaying);
    std::string make_replacement(const Entry& rejected);
    const Entry& entry(const std::string& id) const;
    std::filesystem::path file_of(const Entry& e, std::string_view suffix) const;
    SynthesizedSample regenerate(const Entry& e) const;
    void append_log(const Verdict& verdict, const Entry& e);

    std::filesystem::path dir_;
    SynthesisConfig cfg_;
    PreparedCorpus corpus_;
    std::map<std::string, Entry> entries_;
    std::map<std::string, std::string> overrides_;
    std::size_t replayed_ = 0;
    std::size_t resynthesized_ = 0;
    std::FILE* log_ = nullptr;
    mutable std::shared_mutex mutex_;
};

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::filesystem::path> ui_dir;
};

/// HTTP front of a CurationStore (JSON payloads, PNG rasters).
class CurationServer {
public:
    CurationServer(CurationStore& store, ServerOptions options);
    ~CurationServer();
    CurationServer(const CurationServer&) = delete;
    CurationServer& operator=(const CurationServer&) = delete;

    /// Binds the socket; returns the actual port (port 0 picks a free one).
    int bind();
    /// Blocks serving requests until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace gcp
