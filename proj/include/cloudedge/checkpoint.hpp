#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "cloudedge/matrix.hpp"

namespace cloudedge::numerics {

// On-disk layout:
//   <stem>.json  manifest: {"format", "version", "dtype": "float64",
//                "byte_order": "little-endian", "data_file",
//                "tensors": [{"name", "rows", "cols", "offset"}], "meta": {...}}
//   <stem>.bin   tensors back to back, row-major IEEE-754 binary64,
//                least significant byte first; "offset" is in bytes.

struct Checkpoint {
    std::vector<NamedMatrix> tensors;
    nlohmann::json meta;
};

void save_checkpoint(const std::filesystem::path& stem, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& stem);

/// Appends `values` as little-endian binary64 regardless of host byte order.
void append_le_f64(std::vector<unsigned char>& out, std::span<const double> values);
std::vector<double> read_le_f64(std::span<const unsigned char> bytes);

}  // namespace cloudedge::numerics
