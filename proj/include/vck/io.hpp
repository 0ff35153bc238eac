#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vck/grid.hpp"

namespace vck {

// 17-significant-digit formatting, lossless for doubles.
std::string format_g17(double x);

void ensure_dir(const std::string& dir);

// CSV with a header row; every numeric cell uses 17 significant digits.
void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows);

// Two-column whitespace-separated plot data.
void write_plotdata(const std::string& path, const std::vector<double>& x,
                    const std::vector<double>& y);

// Long-format grid field: header v,y,F, one row per cell.
void write_field_csv(const std::string& path, const Grid& g, const DensityField& f);
DensityField read_field_csv(const std::string& path, const Grid& g);

// FNV-1a hash used to fingerprint configs in the manifest.
uint64_t fnv1a64(const std::string& data);

// Run manifest: config hash, version, seed, produced files, timestamp.
void write_manifest(const std::string& dir, const std::string& config_text, uint64_t seed,
                    const std::vector<std::string>& files);

} // namespace vck
