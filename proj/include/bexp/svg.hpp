#pragma once

#include "bexp/bench.hpp"

#include <string>
#include <utility>
#include <vector>

namespace bexp {

/// Overlaid step-outline histograms, one series per label.
void write_histogram_svg(const std::string& path, const std::string& title,
                         const std::vector<std::pair<std::string, Histogram>>& series);

/// Horizontal bar chart, e.g. relative regret per policy.
void write_bar_svg(const std::string& path, const std::string& title,
                   const std::vector<std::string>& labels,
                   const std::vector<double>& values);

}  // namespace bexp
