#pragma once

#include "malfam/characteristics.hpp"
#include "malfam/profile.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>

namespace malfam::cli {

/// Every tunable of a run. Precedence: defaults < --config file < flags.
struct RunConfig {
    FeatureConfig features;
    double threshold = 0.5;
    EnduranceConfig endurance;
    double text_threshold = 0.7;
    std::optional<std::uint64_t> seed;
    bool weighted_update = false;
    unsigned threads = 0;
    std::size_t folds = 10;

    void validate() const;
};

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace malfam::cli
