#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cxrtask {

/// Largest-remainder apportionment of `total` units over nonnegative
/// integer weights: floor the exact quotas, then hand the leftover units
/// to the largest fractional remainders (ties resolve to the lowest
/// index). Every count ends within 1 of its exact quota.
inline std::vector<std::int64_t> apportion_largest_remainder(
    std::int64_t total, const std::vector<unsigned __int128>& weights) {
    if (total < 0) throw std::invalid_argument("apportion: negative total");
    unsigned __int128 sum = 0;
    for (auto w : weights) sum += w;
    if (sum == 0) throw std::invalid_argument("apportion: zero weight sum");

    const std::size_t n = weights.size();
    std::vector<std::int64_t> counts(n, 0);
    std::vector<unsigned __int128> remainders(n, 0);
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned __int128 scaled = static_cast<unsigned __int128>(total) * weights[i];
        counts[i] = static_cast<std::int64_t>(scaled / sum);
        remainders[i] = scaled % sum;
        assigned += counts[i];
    }
    std::int64_t leftover = total - assigned;
    while (leftover > 0) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (remainders[i] > remainders[best]) best = i;
        }
        ++counts[best];
        remainders[best] = 0;
        --leftover;
    }
    return counts;
}

}  // namespace cxrtask
