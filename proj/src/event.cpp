#include "georf/event.hpp"

namespace georf {

std::string to_string(Severity s) {
  switch (s) {
    case Severity::NoDamage: return "no_damage";
    case Severity::Minor: return "minor";
    case Severity::Moderate: return "moderate";
    default: return "major";
  }
}

std::optional<Severity> parse_severity(const std::string& text) {
  if (text == "no_damage") return Severity::NoDamage;
  if (text == "minor") return Severity::Minor;
  if (text == "moderate") return Severity::Moderate;
  if (text == "major") return Severity::Major;
  return std::nullopt;
}

}  // namespace georf
