#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "fatigue/errors.hpp"
#include "fatigue/tensor.hpp"

namespace fatigue::detail {

using json = nlohmann::ordered_json;

inline json to_json(const ParamSet& p) {
  json arr = json::array();
  for (const auto& t : p.tensors())
    arr.push_back(json{{"name", t.name}, {"shape", t.shape}, {"values", t.values}});
  return arr;
}

// Overwrites the values of `into`; names and shapes must already match.
inline void from_json(const json& arr, ParamSet& into, const std::string& what) {
  if (!arr.is_array()) throw ValidationError(what + ": expected an array of tensors");
  ParamSet loaded;
  for (const auto& t : arr) {
    auto& dst = loaded.add(t.at("name").get<std::string>(), t.at("shape").get<std::vector<std::size_t>>());
    auto values = t.at("values").get<std::vector<double>>();
    if (values.size() != dst.values.size())
      throw ValidationError(what + ": tensor '" + dst.name + "' has " + std::to_string(values.size()) +
                            " values, shape implies " + std::to_string(dst.values.size()));
    dst.values = std::move(values);
  }
  try {
    into.check_same_layout(loaded);
  } catch (const ValidationError& e) {
    throw ValidationError(what + ": " + e.what());
  }
  into = std::move(loaded);
}

}  // namespace fatigue::detail
