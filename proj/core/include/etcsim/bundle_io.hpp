/**
 * @file bundle_io.hpp
 * @brief Versioned JSON model bundles, engine configuration documents and
 * CSV writers for catalogs.
 */
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "etcsim/engine.hpp"

namespace etcsim {

inline constexpr const char* kBundleSchema = "etcsim-bundle";
inline constexpr int kBundleVersion = 1;

std::string bundle_to_json(const ModelBundle& bundle);
/// Throws ErrorKind::Schema on malformed documents or a version mismatch.
ModelBundle bundle_from_json(const std::string& text);

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

std::string engine_config_to_json(const EngineConfig& config);
/// Overrides the keys present in `text` on top of `base`; unknown keys are a
/// validation error.
EngineConfig engine_config_from_json(const std::string& text, EngineConfig base = {});

/// Writes the input CSV schema; `comments` become leading '# ' lines.
void write_catalog_csv(const Catalog& catalog, std::ostream& out,
                       const std::vector<std::string>& comments = {});
/// Input schema plus seed, sampler_tag and termination_cause columns.
void write_synthetic_csv(const SyntheticCatalog& catalog, std::ostream& out,
                         const std::vector<std::string>& comments = {});

}  // namespace etcsim
