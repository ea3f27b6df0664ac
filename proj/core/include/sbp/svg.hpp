#pragma once

#include "sbp/experiment.hpp"

#include <iosfwd>
#include <string>

namespace sbp {

/// Band plot: shaded min-max and q25-q75 bands with the median on top, log10
/// MSE axis (zeros clamped to 1e-300), no external assets.
void emit_svg(std::ostream& out, const QuantileSeries& series, const std::string& title = "");
void emit_svg(const std::string& path, const QuantileSeries& series, const std::string& title = "");

}  // namespace sbp
