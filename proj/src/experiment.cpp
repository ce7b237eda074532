#include "cloudedge/experiment.hpp"

#include "cloudedge/error.hpp"

namespace cloudedge {

std::vector<edge::EdgeModel> fit_edges(const RunConfig& config, const dataset::DatasetSplit& split) {
    return edge::fit_all_edges(split, config.aggregation);
}

graph::CorrelationGraph build_graph(const RunConfig& config, const dataset::DatasetSplit& split) {
    return build_graph(config, split, config.graph.threshold);
}

graph::CorrelationGraph build_graph(const RunConfig& config, const dataset::DatasetSplit& split,
                                    double p_threshold) {
    auto options = config.graph;
    options.threshold = p_threshold;
    return graph::build_graph(split.train, split.sensor_names, options);
}

gcrl::GcrlParams train_cloud(const RunConfig& config, const dataset::DatasetSplit& split,
                             const graph::CorrelationGraph& graph, gcrl::TrainReport* report) {
    auto model = config.cloud.model;
    model.n_sensors = split.n_sensors();
    model.window = config.aggregation.window_length();
    const auto samples = harness::training_samples(split.train, config.aggregation, model.n_sensors,
                                                   model.n_classes, config.cloud.resample_factor);
    if (samples.empty()) throw ConfigError("training split holds no complete window");
    const auto p = gcrl::propagation_matrix(graph.adjacency(), graph.size());
    return gcrl::train(samples, model, p, config.cloud.train, report);
}

long resolve_sensitivity(const RunConfig& config, const dataset::DatasetSplit& split,
                         std::span<const edge::EdgeModel> models) {
    if (config.e) return *config.e;
    return harness::select_sensitivity(harness::run_edges(split.train, models, split.n_sensors()));
}

nlohmann::json to_json(const gcrl::TrainReport& r) {
    return {{"initial_loss", r.initial_loss}, {"train_loss", r.train_loss},   {"validation_loss", r.validation_loss},
            {"best_epoch", r.best_epoch},     {"epochs_run", r.epochs_run},   {"train_size", r.train_size},
            {"validation_size", r.validation_size}};
}

nlohmann::json model_card(const RunConfig& config, const graph::CorrelationGraph& graph,
                          const gcrl::GcrlParams& params, const gcrl::TrainReport& report) {
    nlohmann::json final_metrics = nullptr;
    if (report.best_epoch > 0) {
        final_metrics = {{"best_epoch", report.best_epoch},
                         {"validation_loss", report.validation_loss.at(report.best_epoch - 1)},
                         {"train_loss", report.train_loss.at(report.best_epoch - 1)}};
    }
    return {{"model", "gcrl"},
            {"config", gcrl::to_json(params.config)},
            {"graph_hash", graph.hash()},
            {"graph_edges", graph.edge_count()},
            {"p_threshold", graph.options().threshold},
            {"run_seed", config.seed},
            {"training_seed", config.cloud.train.seed},
            {"final_metrics", final_metrics},
            {"training", to_json(report)}};
}

}  // namespace cloudedge
