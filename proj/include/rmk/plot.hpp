#pragma once

#include <string>
#include <vector>

#include "rmk/eval.hpp"

namespace rmk {

// Renders one standalone SVG per attack family: bit accuracy against severity,
// one polyline per swept model. Returns the written file paths (sorted by
// attack name). The reference rows carry no severity and are not plotted.
std::vector<std::string> write_accuracy_plots(const std::string& out_dir,
                                              const std::vector<SweepTable>& tables);

} // namespace rmk
