#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcp/corpus.hpp"
#include "gcp/grouping.hpp"

namespace gcp {

inline constexpr Size kPatternSize{224, 224};

struct GroupPattern {
    std::string label;
    RealImage pattern; // occupancy frequency in [0, 1]
};

/// Pixel-wise mean of the masks after nearest-neighbour resize to `size`.
GroupPattern group_pattern(const std::string& label, const std::vector<BinaryMask>& masks,
                           Size size = kPatternSize);

/// round(255 * frequency)
GrayImage pattern_to_gray(const GroupPattern& pattern);

struct DatasetReport {
    GroupStats stats;
    std::vector<std::pair<std::string, std::size_t>> group_sizes;
    std::map<std::string, std::size_t> per_origin;

    [[nodiscard]] nlohmann::json to_json() const;
};

DatasetReport dataset_report(const GroupedCorpus& corpus, const Manifest& manifest);

} // namespace gcp
