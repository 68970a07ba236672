#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace cohortsurv {

// Right-censored, left-truncated observations on a discrete time axis.
// Subject i is at risk at every time t with entry[i] <= t <= exit[i]; when
// event[i] is set, the subject dies at exit[i].
struct SurvivalData {
  std::vector<double> entry;
  std::vector<double> exit;
  std::vector<std::uint8_t> event;

  std::size_t size() const noexcept { return exit.size(); }
  std::size_t event_count() const noexcept {
    std::size_t n = 0;
    for (auto e : event) n += e ? 1 : 0;
    return n;
  }

  // Throws DataError on length mismatch, non-finite times or exit < entry.
  void validate() const;
};

// How first-appearance episodes enter the risk sets.
enum class EntryMode {
  Staggered,  // delayed entry at the subject's entry episode
  Origin,     // everyone at risk from the first episode
};

}  // namespace cohortsurv
