#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "pair/types.hpp"

namespace pair::io {

/// PMAT dense matrix file: magic "PMAT1\0", little-endian u64 rows and cols,
/// then rows*cols IEEE-754 doubles in column-major order.
void write_pmat(const std::string& path, const Matrix& m);
Matrix read_pmat(const std::string& path);

std::string sha256_file(const std::string& path);

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr const char* kLibraryVersion = "0.1.0";

/// Writes manifest.json into dir: schema version, model kind, per-file
/// sha256 hashes, and the caller's config snapshot.
void write_manifest(const std::string& dir, const std::string& kind,
                    const std::vector<std::string>& files, const nlohmann::json& config);

/// Loads and verifies a manifest: schema version and every file hash must
/// match or the load is refused.
nlohmann::json load_manifest(const std::string& dir);

} // namespace pair::io
