#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sclab/evaluator.hpp"

namespace sclab {

// Loss-vs-probability curve family over p in (0, 1), one curve per gamma.
// The gamma = 0 curve is plain cross-entropy.
void write_focal_curves_svg(const std::filesystem::path& path,
                            const std::vector<double>& gammas);

// Stacked-bar histogram with the four correctness/hardness partitions, the
// two reference markers and a machine-readable <desc> carrying the totals.
void write_histogram_svg(const std::filesystem::path& path, const Histogram& hist,
                         const std::string& title, const std::string& x_label);

}  // namespace sclab
