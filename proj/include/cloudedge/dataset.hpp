#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace cloudedge::dataset {

// Class ids.
//
// Frames carry the multi-class convention internally: 0 is normal and
// 1..K are attack types. The edge detector works with the binary
// convention of the Gaussian/Bayes stage, where 0 is abnormal and 1 is
// normal. Use to_binary_label / from_binary_label to cross between them.
inline constexpr int kNormalClass = 0;
inline constexpr int kBinaryAbnormal = 0;
inline constexpr int kBinaryNormal = 1;

constexpr int to_binary_label(int class_id) noexcept {
    return class_id == kNormalClass ? kBinaryNormal : kBinaryAbnormal;
}

/// Binary-convention labels carry no attack type; abnormal maps to class 1.
constexpr int from_binary_label(int binary_label) noexcept {
    return binary_label == kBinaryNormal ? kNormalClass : 1;
}

/// How the label column of an input CSV is encoded.
enum class LabelScheme {
    Binary,      ///< 0 = abnormal, 1 = normal
    MultiClass,  ///< 0 = normal, 1..K = attack type
};

LabelScheme parse_label_scheme(const std::string& name);

struct SensorFrame {
    std::int64_t timestamp = 0;
    std::vector<double> values;
    int label = kNormalClass;  // multi-class convention

    bool abnormal() const noexcept { return label != kNormalClass; }
    bool operator==(const SensorFrame&) const = default;
};

/// Sensor name -> edge id (1..k).
using EdgeMap = std::map<std::string, int>;

struct DatasetSplit {
    std::vector<SensorFrame> train;
    std::vector<SensorFrame> test;
    std::vector<std::string> sensor_names;
    std::vector<int> edge_assignment;  // sensor index -> edge id

    std::size_t n_sensors() const noexcept { return sensor_names.size(); }
    /// Distinct edge ids in ascending order.
    std::vector<int> edge_ids() const;
    /// Global sensor indices belonging to one edge, ascending.
    std::vector<std::size_t> sensors_of_edge(int edge) const;
    bool operator==(const DatasetSplit&) const = default;
};

/// A labelled table of frames before it is split.
struct LabeledTable {
    std::vector<std::string> sensor_names;
    std::vector<SensorFrame> frames;
    std::size_t missing_filled = 0;
};

struct LoadOptions {
    std::string label_column = "label";
    std::string timestamp_column = "timestamp";
    LabelScheme scheme = LabelScheme::Binary;
    /// Leading fraction of rows that becomes the training split.
    double train_fraction = 0.0;
};

struct ClassCounts {
    std::size_t normal = 0;
    std::size_t abnormal = 0;
};

ClassCounts count_classes(std::span<const SensorFrame> frames);

/// Parses a labelled sensor CSV. Rows are sorted by timestamp; empty
/// cells are forward-filled, then leading gaps back-filled.
LabeledTable read_table(const std::filesystem::path& path, const LoadOptions& options);

/// Resolves an edge map against sensor names. Every sensor must be mapped
/// exactly once and every mapped name must exist.
std::vector<int> resolve_edge_map(const std::vector<std::string>& sensor_names, const EdgeMap& edge_map);

DatasetSplit load_csv(const std::filesystem::path& path, const EdgeMap& edge_map, const LoadOptions& options);

/// Train and test kept in separate files with identical headers.
DatasetSplit load_csv_pair(const std::filesystem::path& train_path, const std::filesystem::path& test_path,
                           const EdgeMap& edge_map, const LoadOptions& options);

/// Writes frames with the shortest round-trip decimal rendering of each value.
void write_csv(std::ostream& out, const std::vector<std::string>& sensor_names,
               std::span<const SensorFrame> frames, LabelScheme scheme);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& sensor_names,
               std::span<const SensorFrame> frames, LabelScheme scheme);

/// Duplicates every abnormal frame `factor` times in place; normal frames pass through.
std::vector<SensorFrame> resample_abnormal(std::span<const SensorFrame> train, std::size_t factor);

EdgeMap edge_map_from_json(const nlohmann::json& doc);
nlohmann::json edge_map_to_json(const DatasetSplit& split);
EdgeMap read_edge_map(const std::filesystem::path& path);

}  // namespace cloudedge::dataset
