#include "edgetb/distrib/filter.hpp"

#include <algorithm>
#include <numeric>

#include "edgetb/distrib/frame.hpp"

namespace edgetb::distrib {

FilterResult filter_for_bandwidth(const std::vector<FilterItem>& pending,
                                  std::uint64_t budget_bytes) {
  std::vector<std::size_t> order(pending.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return pending[x].message.priority < pending[y].message.priority;
  });

  FilterResult result;
  std::uint64_t remaining = budget_bytes;
  for (std::size_t i : order) {
    const std::uint64_t size = encoded_frame_size(pending[i].message);
    if (size <= remaining) {
      remaining -= size;
      result.send.push_back(i);
    } else if (pending[i].bundle_eligible) {
      result.defer.push_back(i);
    } else {
      result.drop.push_back(i);
    }
  }
  return result;
}

}  // namespace edgetb::distrib
