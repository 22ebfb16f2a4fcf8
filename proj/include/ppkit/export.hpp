#pragma once

#include <span>
#include <string>
#include <vector>

#include "ppkit/model.hpp"

namespace ppkit {

/// Row-major C x C matrix with a header row and a leading name column.
/// Rows are affected types, columns are source types.
std::string matrix_csv(std::span<const std::string> names, std::span<const double> matrix);
/// Heatmap on a linear white-to-red scale with the min and max annotated.
std::string heatmap_svg(std::span<const std::string> names, std::span<const double> matrix,
                        const std::string& title = "Infectivity");

/// Two columns: type, value.
std::string vector_csv(std::span<const std::string> names, std::span<const double> values,
                       const std::string& value_header);
std::string bar_chart_svg(std::span<const std::string> names, std::span<const double> values,
                          const std::string& title = "Exogenous intensity");

/// Base rate of each type with no sequence features (zero embedding).
std::vector<double> exogenous_rates(const HawkesModel& model);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace ppkit
