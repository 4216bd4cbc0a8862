#pragma once

#include <optional>
#include <string_view>

namespace samba {

enum class Modality { rgb, depth, flow, thermal };

constexpr std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::rgb:
      return "rgb";
    case Modality::depth:
      return "depth";
    case Modality::flow:
      return "flow";
    case Modality::thermal:
      return "thermal";
  }
  return "?";
}

constexpr std::optional<Modality> parse_modality(std::string_view name) {
  if (name == "rgb") return Modality::rgb;
  if (name == "depth") return Modality::depth;
  if (name == "flow") return Modality::flow;
  if (name == "thermal") return Modality::thermal;
  return std::nullopt;
}

}  // namespace samba
