#pragma once
// The 68-region cortical parcellation used to label band-power matrix rows:
// regions 1-34 cover the left hemisphere and 35-68 the mirrored right
// hemisphere, in the standard atlas order.

#include <array>
#include <string>
#include <vector>

#include "ok/errors.hpp"

namespace ok::regions {

inline constexpr int kRegionCount = 68;

namespace detail {

inline const std::array<const char*, 34>& base_names() {
    static const std::array<const char*, 34> names = {
        "bankssts",
        "caudalanteriorcingulate",
        "caudalmiddlefrontal",
        "cuneus",
        "entorhinal",
        "frontalpole",
        "fusiform",
        "inferiorparietal",
        "inferiortemporal",
        "insula",
        "isthmuscingulate",
        "lateraloccipital",
        "lateralorbitofrontal",
        "lingual",
        "medialorbitofrontal",
        "middletemporal",
        "paracentral",
        "parahippocampal",
        "parsopercularis",
        "parsorbitalis",
        "parstriangularis",
        "pericalcarine",
        "postcentral",
        "posteriorcingulate",
        "precentral",
        "precuneus",
        "rostralanteriorcingulate",
        "rostralmiddlefrontal",
        "superiorfrontal",
        "superiorparietal",
        "superiortemporal",
        "supramarginal",
        "temporalpole",
        "transversetemporal",
    };
    return names;
}

}  // namespace detail

// Atlas name for a 1-based region index.
inline std::string region_name(int index) {
    if (index < 1 || index > kRegionCount) {
        throw InvalidRange("region_name: index must be in 1..68");
    }
    const bool left = index <= 34;
    return std::string("ctx-") + (left ? "lh-" : "rh-") +
           detail::base_names()[static_cast<std::size_t>((index - 1) % 34)];
}

// All 68 names in index order.
inline const std::vector<std::string>& region_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        out.reserve(kRegionCount);
        for (int i = 1; i <= kRegionCount; ++i) out.push_back(region_name(i));
        return out;
    }();
    return names;
}

}  // namespace ok::regions
