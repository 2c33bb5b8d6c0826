#include "gcp/analytics.hpp"

#include <cmath>
#include <string_view>
#include <unordered_map>

#include "gcp/error.hpp"
#include "gcp/imaging.hpp"

using nlohmann::json;

namespace gcp {

GroupPattern group_pattern(const std::string& label, const std::vector<BinaryMask>& masks, Size size) {
    if (masks.empty())
        throw ValidationError("group '" + label + "' has no masks to average");
    if (size.width < 1 || size.height < 1)
        throw ValidationError("pattern size must be positive");
    std::vector<std::uint32_t> hits(size.area(), 0);
    for (const auto& m : masks) {
        const BinaryMask r = m.size() == size ? m : resize_nearest(m, size);
        auto bits = r.bits();
        for (std::size_t i = 0; i < hits.size(); ++i)
            hits[i] += bits[i];
    }
    GroupPattern p{label, RealImage(size)};
    auto out = p.pattern.pixels();
    const double n = static_cast<double>(masks.size());
    for (std::size_t i = 0; i < hits.size(); ++i)
        out[i] = static_cast<double>(hits[i]) / n;
    return p;
}

GrayImage pattern_to_gray(const GroupPattern& pattern) {
    GrayImage g(pattern.pattern.size());
    auto in = pattern.pattern.pixels();
    auto out = g.pixels();
    for (std::size_t i = 0; i < in.size(); ++i)
        out[i] = static_cast<std::uint8_t>(std::lround(255.0 * in[i]));
    return g;
}

json DatasetReport::to_json() const {
    json sizes = json::array();
    for (const auto& [label, n] : group_sizes)
        sizes.push_back({{"label", label}, {"size", n}});
    return json{{"images", stats.n_images},
                {"categories", stats.n_categories},
                {"avg_per_group", stats.avg_per_group},
                {"max_per_group", stats.max_per_group},
                {"min_per_group", stats.min_per_group},
                {"groups", sizes},
                {"per_origin", per_origin}};
}

DatasetReport dataset_report(const GroupedCorpus& corpus, const Manifest& manifest) {
    DatasetReport r;
    r.stats = group_statistics(corpus);
    std::unordered_map<std::string_view, Origin> origin_of;
    for (const auto& rec : manifest.records)
        origin_of.emplace(rec.id, rec.origin);
    for (const auto& g : corpus.groups) {
        r.group_sizes.emplace_back(g.label, g.member_ids.size());
        for (const auto& id : g.member_ids)
            if (auto it = origin_of.find(id); it != origin_of.end())
                ++r.per_origin[std::string(to_string(it->second))];
    }
    return r;
}

} // namespace gcp
