#pragma once

#include <nlohmann/json.hpp>

#include "vralpr/detection.hpp"
#include "vralpr/error.hpp"

namespace vralpr {

inline nlohmann::ordered_json bbox_to_json(const BBox& b) {
  return {{"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}, {"score", b.score}, {"label", b.label}};
}

inline BBox bbox_from_json(const nlohmann::json& j) {
  BBox b;
  b.x0 = j.at("x0").get<int>();
  b.y0 = j.at("y0").get<int>();
  b.x1 = j.at("x1").get<int>();
  b.y1 = j.at("y1").get<int>();
  b.score = j.value("score", 1.0);
  b.label = j.value("label", std::string{});
  return b;
}

}  // namespace vralpr
