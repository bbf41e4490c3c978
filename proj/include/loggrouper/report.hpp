#pragma once

#include <string>
#include <string_view>

#include "loggrouper/pipeline.hpp"

namespace loggrouper {

enum class ReportFormat { Table, Json, Csv };

ReportFormat parse_report_format(std::string_view name);

// Per-combo scores (vectorizer, preprocessed, algorithm, k, noise %, SC, CH,
// NSC, NCH), the per-algorithm averages and the best combo.
std::string render_report(const PipelineRun& run, ReportFormat format);

}  // namespace loggrouper
