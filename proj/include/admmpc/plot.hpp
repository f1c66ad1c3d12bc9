#pragma once

#include <string>
#include <vector>

#include "admmpc/bench.hpp"

namespace admmpc {

enum class PlotKind { Heatmap, PercentileBand };

/// Renders experiment records to a self-contained SVG.
///
/// Heatmap: one panel per horizon, cells = arithmetic-mean iterations per
/// (rho1, rho2), both axes log-scaled. PercentileBand: median and p98
/// iteration curves against the swept variable, which is detected from the
/// records (epsilon sweep -> log-log axes, horizon sweep -> linear axes plus
/// a median wall-time panel).
///
/// Throws std::invalid_argument on an empty or ambiguous record set before
/// touching the output path, std::runtime_error when the path is unwritable.
void emit_plot(const std::vector<ExperimentRecord>& records, PlotKind kind,
               const std::string& out_path);

}  // namespace admmpc
