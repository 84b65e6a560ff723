#pragma once

#include <cstdint>
#include <string>

namespace wvar {

inline constexpr const char* kVersion = "wvar 0.1.0";

/// FNV-1a 64-bit content hash, hex-encoded; used to fingerprint input files
/// inside reports.
std::string fnv1a_hex(const std::string& data);

/// Hash of a file's bytes; throws if the file cannot be read.
std::string hash_file(const std::string& path);

/// Resolve the worker-thread count: the WVAR_THREADS environment variable
/// overrides the flag value; a nonpositive result falls back to the OpenMP
/// default. Applies the result via omp_set_num_threads when available.
int configure_threads(int requested);

}  // namespace wvar
