#include "gcp/grouping.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "gcp/error.hpp"

namespace gcp {

const Group* GroupedCorpus::find(std::string_view label) const {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) { return g.label == label; });
    return it == groups.end() ? nullptr : &*it;
}

std::size_t GroupedCorpus::total() const {
    return std::accumulate(groups.begin(), groups.end(), std::size_t{0},
                           [](std::size_t n, const Group& g) { return n + g.member_ids.size(); });
}

GroupingResult build_groups(const Manifest& manifest, std::size_t min_group_size) {
    std::vector<Group> all;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& r : manifest.records) {
        if (r.label.empty())
            throw ValidationError("record '" + r.id + "' has no label");
        auto [it, inserted] = index.try_emplace(r.label, all.size());
        if (inserted)
            all.push_back(Group{r.label, {}, std::nullopt});
        all[it->second].member_ids.push_back(r.id);
    }

    GroupingResult result;
    for (auto& g : all) {
        if (g.member_ids.size() < min_group_size) {
            result.excluded.push_back({g.label, g.member_ids.size()});
            spdlog::info("group '{}' excluded: {} < {} members", g.label, g.member_ids.size(), min_group_size);
        } else {
            result.corpus.groups.push_back(std::move(g));
        }
    }
    if (result.corpus.groups.empty())
        throw ValidationError("no group has at least " + std::to_string(min_group_size) + " members");
    return result;
}

GroupStats group_statistics(const GroupedCorpus& corpus) {
    GroupStats s;
    s.n_categories = corpus.z();
    if (s.n_categories == 0)
        return s;
    s.min_per_group = corpus.groups.front().member_ids.size();
    for (const auto& g : corpus.groups) {
        const auto n = g.member_ids.size();
        s.n_images += n;
        s.max_per_group = std::max(s.max_per_group, n);
        s.min_per_group = std::min(s.min_per_group, n);
    }
    s.avg_per_group = static_cast<double>(s.n_images) / static_cast<double>(s.n_categories);
    return s;
}

std::string format_stats_row(const GroupStats& s) {
    char avg[64];
    std::snprintf(avg, sizeof avg, "%.1f", s.avg_per_group);
    return std::to_string(s.n_images) + " " + std::to_string(s.n_categories) + " " + avg + " " +
           std::to_string(s.max_per_group) + " " + std::to_string(s.min_per_group);
}

} // namespace gcp
