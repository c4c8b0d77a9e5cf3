#pragma once

#include <string>

#include "iirforge/search.hpp"

namespace iirforge {

/// Result document (schema shipped in docs/result.schema.json).
std::string result_to_json(const DesignResult& result, const FrequencySpec& spec,
                           double tau_used = 0.02);

/// Reads the coefficient set back from a result document.
QuantizedFilter filter_from_json(const std::string& json_text);

}  // namespace iirforge
