#pragma once

#include <cstdint>
#include <filesystem>

#include "trimer/spectral.hpp"

namespace trimer {

/// Binary eigenpair cache.
///
/// Layout, all little-endian:
///   "BHT1" | u64 format version | u64 N | f64 u | f64 v | f64 omega | u64 dim
///   | dim x f64 energies | dim*dim x f64 eigenvectors (column-major)
///   | u64 FNV-1a checksum of every preceding byte
///
/// The format version also pins the Fock ordering: it is bumped whenever
/// FockBasis::kOrderingVersion changes, and readers reject any other version.
inline constexpr std::uint64_t kCacheFormatVersion = 1;

/// File name derived from the full cache key (bit patterns of u, v, omega).
std::filesystem::path cache_file_name(const ModelParams& params);

/// Writes through a uniquely named temporary and renames it into place, so
/// concurrent writers of one key never expose a torn file.
void write_spectrum(const std::filesystem::path& path, const Spectrum& spectrum);

/// Throws CacheError on bad magic, stale version, truncation or checksum mismatch.
Spectrum read_spectrum(const std::filesystem::path& path);

/// Reads `dir / cache_file_name(params)` when present and matching, else
/// diagonalizes and stores. An empty `dir` disables caching.
Spectrum load_or_compute_spectrum(const ModelParams& params, const std::filesystem::path& dir);

}  // namespace trimer
