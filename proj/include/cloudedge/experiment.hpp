#pragma once

#include <vector>

#include <json.hpp>

#include "cloudedge/config.hpp"
#include "cloudedge/correlation_graph.hpp"
#include "cloudedge/edge_detector.hpp"
#include "cloudedge/gcrl.hpp"
#include "cloudedge/harness.hpp"

namespace cloudedge {

std::vector<edge::EdgeModel> fit_edges(const RunConfig& config, const dataset::DatasetSplit& split);

graph::CorrelationGraph build_graph(const RunConfig& config, const dataset::DatasetSplit& split);
graph::CorrelationGraph build_graph(const RunConfig& config, const dataset::DatasetSplit& split, double p_threshold);

/// GCRL on raw training windows, abnormal windows repeated by the configured factor.
gcrl::GcrlParams train_cloud(const RunConfig& config, const dataset::DatasetSplit& split,
                             const graph::CorrelationGraph& graph, gcrl::TrainReport* report = nullptr);

/// The configured e, or the largest e that keeps every abnormal training window uploaded.
long resolve_sensitivity(const RunConfig& config, const dataset::DatasetSplit& split,
                         std::span<const edge::EdgeModel> models);

nlohmann::json model_card(const RunConfig& config, const graph::CorrelationGraph& graph,
                          const gcrl::GcrlParams& params, const gcrl::TrainReport& report);

nlohmann::json to_json(const gcrl::TrainReport& report);

}  // namespace cloudedge
