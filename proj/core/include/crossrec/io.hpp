#pragma once

#include <cstdint>
#include <string>

#include "crossrec/dsn.hpp"
#include "crossrec/sdae.hpp"

namespace crossrec {

// Versioned structured-text parameter dumps with shape headers. Values are
// printed with "%.17g" so a load/save cycle is exact and byte-stable.
void save_dsn_model(const DsnModel& model, const std::string& path);
DsnModel load_dsn_model(const std::string& path);

void save_sdae_model(const SdaeModel& model, const std::string& path);
SdaeModel load_sdae_model(const std::string& path);

// FNV-1a 64-bit content hash, hex-encoded.
std::string file_hash_hex(const std::string& path);

// MANIFEST.txt in `dir`: one "name \t bytes \t fnv1a64" line per regular
// file (sorted by name, manifest itself excluded).
void write_manifest(const std::string& dir);

}  // namespace crossrec
