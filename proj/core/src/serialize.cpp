#include "svshrink/serialize.hpp"

#include "svshrink/errors.hpp"

#include <cmath>

namespace svshrink {

using nlohmann::json;

namespace json_detail {

namespace {

[[noreturn]] void fail(const std::string &pointer, const std::string &msg) {
  throw ConfigError("at " + (pointer.empty() ? std::string("/") : pointer) + ": " + msg);
}

} // namespace

void require_object(const json &j, const std::string &pointer) {
  if (!j.is_object())
    fail(pointer, "expected an object");
}

const json &require(const json &j, const std::string &pointer, const std::string &key) {
  require_object(j, pointer);
  auto it = j.find(key);
  if (it == j.end())
    fail(pointer, "missing required member '" + key + "'");
  return *it;
}

double number(const json &j, const std::string &pointer) {
  if (!j.is_number())
    fail(pointer, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v))
    fail(pointer, "expected a finite number");
  return v;
}

std::int64_t integer(const json &j, const std::string &pointer) {
  if (j.is_number_integer())
    return j.get<std::int64_t>();
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.0e15)
      return static_cast<std::int64_t>(v);
  }
  fail(pointer, "expected an integer");
}

std::string string(const json &j, const std::string &pointer) {
  if (!j.is_string())
    fail(pointer, "expected a string");
  return j.get<std::string>();
}

void only_keys(const json &j, const std::string &pointer,
               std::initializer_list<const char *> allowed) {
  require_object(j, pointer);
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char *a : allowed)
      ok = ok || it.key() == a;
    if (!ok)
      fail(pointer + "/" + it.key(), "unknown member");
  }
}

} // namespace json_detail

using namespace json_detail;

json indices_to_json(const std::vector<std::size_t> &idx) {
  json a = json::array();
  for (std::size_t i : idx)
    a.push_back(i + 1);
  return a;
}

std::vector<std::size_t> indices_from_json(const json &j, const std::string &pointer) {
  if (!j.is_array())
    throw ConfigError("at " + pointer + ": expected an array of indices");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = pointer + "/" + std::to_string(i);
    const std::int64_t v = integer(j[i], p);
    if (v < 1)
      throw ConfigError("at " + p + ": indices are 1-based");
    out.push_back(static_cast<std::size_t>(v - 1));
  }
  return out;
}

json to_json(const NoiseModel &model) {
  return std::visit(
      [](const auto &v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Gaussian>)
          return {{"family", "gaussian"}, {"tau", v.tau}};
        else if constexpr (std::is_same_v<T, Gamma>)
          return {{"family", "gamma"}, {"L", v.L}};
        else
          return {{"family", "poisson"}};
      },
      model);
}

NoiseModel model_from_json(const json &j, const std::string &pointer) {
  const std::string name = string(require(j, pointer, "family"), pointer + "/family");
  Family fam;
  try {
    fam = parse_family(name);
  } catch (const std::exception &e) {
    throw ConfigError("at " + pointer + "/family: " + e.what());
  }
  NoiseModel model;
  switch (fam) {
  case Family::Gaussian:
    only_keys(j, pointer, {"family", "tau"});
    model = Gaussian{number(require(j, pointer, "tau"), pointer + "/tau")};
    break;
  case Family::Gamma:
    only_keys(j, pointer, {"family", "L"});
    model = Gamma{number(require(j, pointer, "L"), pointer + "/L")};
    break;
  case Family::Poisson:
    only_keys(j, pointer, {"family"});
    model = Poisson{};
    break;
  }
  try {
    validate(model);
  } catch (const std::exception &e) {
    throw ConfigError("at " + pointer + ": " + e.what());
  }
  return model;
}

json to_json(const ShrinkagePlan &plan) {
  json j{{"active", indices_to_json(plan.active)}, {"weights", plan.weights}};
  if (plan.clamp_floor)
    j["clamp_floor"] = *plan.clamp_floor;
  return j;
}

ShrinkagePlan plan_from_json(const json &j, const std::string &pointer) {
  only_keys(j, pointer, {"active", "weights", "clamp_floor"});
  ShrinkagePlan plan;
  plan.active = indices_from_json(require(j, pointer, "active"), pointer + "/active");
  const json &w = require(j, pointer, "weights");
  if (!w.is_array())
    throw ConfigError("at " + pointer + "/weights: expected an array");
  for (std::size_t i = 0; i < w.size(); ++i)
    plan.weights.push_back(number(w[i], pointer + "/weights/" + std::to_string(i)));
  if (j.contains("clamp_floor"))
    plan.clamp_floor = number(j["clamp_floor"], pointer + "/clamp_floor");
  return plan;
}

json to_json(const EstimatorSpec &spec) {
  json j = std::visit(
      [](const auto &v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PcaTruncate>)
          return {{"kind", "pca"}, {"rank", v.rank}};
        else if constexpr (std::is_same_v<T, SoftThreshold>)
          return {{"kind", "soft"}, {"lambda", v.lambda}};
        else
          return {{"kind", "weighted"}, {"plan", to_json(v.plan)}};
      },
      spec.kind);
  j["model"] = to_json(spec.model);
  if (spec.clamp_floor)
    j["clamp_floor"] = *spec.clamp_floor;
  return j;
}

EstimatorSpec estimator_spec_from_json(const json &j, const std::string &pointer) {
  only_keys(j, pointer, {"kind", "rank", "lambda", "plan", "model", "clamp_floor"});
  EstimatorSpec spec;
  const std::string kind = string(require(j, pointer, "kind"), pointer + "/kind");
  if (kind == "pca") {
    const std::int64_t r = integer(require(j, pointer, "rank"), pointer + "/rank");
    if (r < 0)
      throw ConfigError("at " + pointer + "/rank: must be nonnegative");
    spec.kind = PcaTruncate{static_cast<std::size_t>(r)};
  } else if (kind == "soft") {
    spec.kind = SoftThreshold{number(require(j, pointer, "lambda"), pointer + "/lambda")};
  } else if (kind == "weighted") {
    spec.kind = Weighted{plan_from_json(require(j, pointer, "plan"), pointer + "/plan")};
  } else {
    throw ConfigError("at " + pointer + "/kind: expected pca, soft or weighted");
  }
  spec.model = model_from_json(require(j, pointer, "model"), pointer + "/model");
  if (j.contains("clamp_floor"))
    spec.clamp_floor = number(j["clamp_floor"], pointer + "/clamp_floor");
  return spec;
}

json to_json(const RiskEstimate &r) {
  json j{{"kind", to_string(r.kind)},
         {"value", r.value},
         {"divergence", to_string(r.divergence_kind)},
         {"offset_note", r.offset_note}};
  if (r.samples)
    j["samples"] = *r.samples;
  if (r.std_error)
    j["std_error"] = *r.std_error;
  return j;
}

json to_json(const ActiveSetReport &r) {
  json entries = json::array();
  for (const AicEntry &e : r.aic_values) {
    if (e.removed)
      entries.push_back({{"removed", *e.removed + 1}, {"value", e.value}});
    else
      entries.push_back({{"set", indices_to_json(e.set)}, {"value", e.value}});
  }
  return {{"selected", indices_to_json(r.selected)},
          {"penalty", r.penalty},
          {"method", to_string(r.method)},
          {"aic_values", entries}};
}

} // namespace svshrink
