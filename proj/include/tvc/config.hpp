#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tvc/model.hpp"

namespace tvc::config {

// A template entry: one profile prototype that expands to `count`
// independent nodes at materialize time.
struct NodeTemplate {
    model::NodeProfile prototype;
    std::size_t count = 1;
};

struct Document {
    model::FieldSpec field;
    std::vector<NodeTemplate> nodes;
};

// Parses and validates a configuration document (JSON text). Fixed-placement
// profiles are validated in full here; random placements are validated after
// materialization. Throws SCHEMA_ERROR for malformed fields and
// INVARIANT_ERROR for violated model invariants.
Document load(const std::string& json_text);
Document load_file(const std::string& path);

// load + template expansion + placement resolution + final validation.
std::vector<model::NodeProfile> load_and_validate(const std::string& json_text,
                                                  std::uint64_t seed);

// FNV-1a digest of the raw config bytes, for run manifests.
std::string digest(const std::string& text);

}  // namespace tvc::config
