#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "georf/dataset.hpp"

namespace georf {

enum class Severity { NoDamage, Minor, Moderate, Major };

std::string to_string(Severity s);
std::optional<Severity> parse_severity(const std::string& text);

struct EventRecord {
  std::int64_t id = 0;
  Point location;
  Severity severity_raw = Severity::NoDamage;
  int severity_binary = 0;  // 1 iff raw maps into the configured high set
};

}  // namespace georf
