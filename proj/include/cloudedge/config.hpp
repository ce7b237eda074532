#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cloudedge/correlation_graph.hpp"
#include "cloudedge/dataset.hpp"
#include "cloudedge/gcrl.hpp"
#include "cloudedge/preprocess.hpp"
#include "cloudedge/synthetic.hpp"

namespace cloudedge {

enum class DataKind { Synthetic, Csv, CsvPair };

struct DataSource {
    DataKind kind = DataKind::Synthetic;
    dataset::SyntheticSpec synthetic;
    std::filesystem::path csv;    // DataKind::Csv
    std::filesystem::path train;  // DataKind::CsvPair
    std::filesystem::path test;
    std::optional<std::filesystem::path> edge_map;  // required for csv input
    dataset::LoadOptions load;
};

struct CloudSection {
    gcrl::GcrlConfig model;  // n_sensors and window are filled from the data
    gcrl::TrainOptions train;
    std::size_t resample_factor = 10;
};

struct RunConfig {
    DataSource data;
    preprocess::AggregationConfig aggregation;
    std::optional<long> e;  // nullopt: tuned on the training windows
    graph::GraphOptions graph;
    CloudSection cloud;
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "out";
};

/// Validates every key and value; relative paths resolve against `base_dir`.
/// Unknown keys are errors.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig read_run_config(const std::filesystem::path& path);

/// Files referenced by the config must exist.
void check_inputs(const RunConfig& config);

/// Deterministic seed for one named module, derived from the run seed.
std::uint64_t named_seed(std::uint64_t seed, std::string_view module);

dataset::DatasetSplit load_data(const RunConfig& config);

nlohmann::json to_json(const RunConfig& config);

}  // namespace cloudedge
