#pragma once

#include "svshrink/activeset.hpp"
#include "svshrink/linalg.hpp"
#include "svshrink/models.hpp"
#include "svshrink/risk.hpp"
#include "svshrink/shrinkage.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace svshrink {

/// JSON forms use 1-based singular-value indices; the C++ API is 0-based.

nlohmann::json to_json(const NoiseModel &model);
NoiseModel model_from_json(const nlohmann::json &j, const std::string &pointer = "");

nlohmann::json to_json(const ShrinkagePlan &plan);
ShrinkagePlan plan_from_json(const nlohmann::json &j, const std::string &pointer = "");

nlohmann::json to_json(const EstimatorSpec &spec);
EstimatorSpec estimator_spec_from_json(const nlohmann::json &j, const std::string &pointer = "");

nlohmann::json to_json(const RiskEstimate &r);
nlohmann::json to_json(const ActiveSetReport &r);

/// Index list shifted to 1-based.
nlohmann::json indices_to_json(const std::vector<std::size_t> &idx);
std::vector<std::size_t> indices_from_json(const nlohmann::json &j, const std::string &pointer);

namespace json_detail {

/// Member `key` of object `j`, or ConfigError naming pointer/key.
const nlohmann::json &require(const nlohmann::json &j, const std::string &pointer,
                              const std::string &key);
double number(const nlohmann::json &j, const std::string &pointer);
std::int64_t integer(const nlohmann::json &j, const std::string &pointer);
std::string string(const nlohmann::json &j, const std::string &pointer);
void require_object(const nlohmann::json &j, const std::string &pointer);
/// Rejects members not in `allowed`.
void only_keys(const nlohmann::json &j, const std::string &pointer,
               std::initializer_list<const char *> allowed);

} // namespace json_detail

} // namespace svshrink
