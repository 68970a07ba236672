#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cohortsurv/cohort.hpp"
#include "cohortsurv/coxph.hpp"
#include "cohortsurv/model_table.hpp"
#include "cohortsurv/synth.hpp"

namespace cohortsurv {

struct RunConfig {
  std::string subcommand;
  std::string data;
  std::string out;
  Format format = Format::Markdown;
  TiesMethod ties = TiesMethod::Efron;
  EntryMode entry_mode = EntryMode::Staggered;
  double conf = 0.95;
  std::uint64_t seed = kDefaultSeed;
  int horizon = kDefaultHorizon;
  double min_screen_minutes = 5.0;
  std::string by = "allegiance";
  std::vector<std::string> only;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

// Command-line entry point; `args` excludes the program name. Results go to
// `out` (or the --out path), diagnostics to `err`. Returns 0 on success, 2 on
// usage errors and 1 on data or model errors. Output files are written only
// after every result has been computed.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cohortsurv
