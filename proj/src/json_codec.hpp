#pragma once

#include "json.hpp"
#include "loggrouper/pipeline.hpp"

namespace loggrouper::codec {

using nlohmann::json;

// Rounds to six significant digits so serialized numbers are stable.
double sig6(double v);

json to_json(const RunConfig& config);
RunConfig config_from_json(const json& j);

json to_json(const QualityReport& report);
QualityReport report_from_json(const json& j);

json to_json(const KeyphraseCloud& cloud);
KeyphraseCloud cloud_from_json(const json& j);

json to_json(const LogRecord& record);

}  // namespace loggrouper::codec
