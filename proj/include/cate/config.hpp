#pragma once

#include <string>

#include "cate/metalearners.hpp"
#include "json.hpp"

namespace cate {

using Json = nlohmann::ordered_json;

// JSON forms of the estimator configuration. Readers fill unspecified keys
// with defaults and throw ArgumentError on unknown learner kinds or bad types.

Json learner_to_json(const LearnerSpec& spec);
LearnerSpec learner_from_json(const Json& j);

Json stack_to_json(const StackSpec& spec);
StackSpec stack_from_json(const Json& j);

Json forest_to_json(const CausalForestParams& params);
CausalForestParams forest_from_json(const Json& j, CausalForestParams base = {});

Json meta_config_to_json(const MetaConfig& config);
MetaConfig meta_config_from_json(const Json& j, MetaConfig base);

/// Default estimator: forest, boosting and ridge stacked for every nuisance
/// and for the second stage.
MetaConfig default_meta_config();

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace cate
