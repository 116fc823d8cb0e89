#pragma once

// JSON documents for fusion schemas and codebooks.

#include "soilfuse/core.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace soilfuse {

FusionSchema parse_schema(std::string_view doc);
std::string write_schema(const FusionSchema& schema);

/// Accepts one codebook object or an array of them.
std::vector<Codebook> parse_codebooks(std::string_view doc);

/// Loads every `*.schema.json` in a directory, sorted by dataset id.
std::vector<FusionSchema> load_schema_dir(const std::string& dir);
/// Loads every `*.codebook.json` in a directory, keyed by codebook id.
std::map<std::string, Codebook> load_codebook_dir(const std::string& dir);

} // namespace soilfuse
