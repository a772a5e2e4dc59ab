#pragma once

#include <string>

#include "georf/geo_forest.hpp"

namespace georf {

inline constexpr int kModelSchemaVersion = 1;

// Versioned JSON document: feature manifest, standardization stats,
// hyperparameters, anchors, then the global and local forests with trees as
// nested node objects. Written with a streaming emitter and read back with a
// SAX parser, so neither direction materializes a DOM for what can be a
// multi-hundred-megabyte file.
void save_model(const GrfModel& model, const std::string& path);
GrfModel load_model(const std::string& path);

}  // namespace georf
