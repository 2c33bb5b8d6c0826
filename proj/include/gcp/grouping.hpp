#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gcp/corpus.hpp"

namespace gcp {

struct Group {
    std::string label;
    std::vector<std::string> member_ids; // manifest order
    std::optional<std::string> superclass;
};

/// Samples partitioned into semantic groups. Every id is in exactly one group.
struct GroupedCorpus {
    std::vector<Group> groups;

    [[nodiscard]] std::size_t z() const { return groups.size(); }
    [[nodiscard]] const Group* find(std::string_view label) const;
    [[nodiscard]] std::size_t total() const;
};

struct ExcludedGroup {
    std::string label;
    std::size_t size = 0;
};

struct GroupingResult {
    GroupedCorpus corpus;
    std::vector<ExcludedGroup> excluded;
};

inline constexpr std::size_t kDefaultMinGroupSize = 4;

/// One group per distinct label, in order of first appearance. Groups smaller
/// than min_group_size are dropped and reported; throws if nothing survives.
GroupingResult build_groups(const Manifest& manifest, std::size_t min_group_size = kDefaultMinGroupSize);

struct GroupStats {
    std::size_t n_images = 0;
    std::size_t n_categories = 0;
    double avg_per_group = 0.0;
    std::size_t max_per_group = 0;
    std::size_t min_per_group = 0;
};

GroupStats group_statistics(const GroupedCorpus& corpus);

/// "240 8 30.0 30 30"
std::string format_stats_row(const GroupStats& stats);

} // namespace gcp
