#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "cloudedge/correlation_graph.hpp"
#include "cloudedge/dataset.hpp"
#include "cloudedge/edge_detector.hpp"
#include "cloudedge/gcrl.hpp"
#include "cloudedge/metrics.hpp"

namespace cloudedge::harness {

using numerics::Matrix;

/// Raw F_t in transit from the edges to the cloud.
struct UploadMessage {
    std::size_t window_index = 0;
    std::int64_t t = 0;
    std::vector<int> edges;
    std::size_t s_total = 0;
    std::int64_t emit_time = 0;  // simulated: end of the window
    std::size_t n_sensors = 0;
    std::size_t window = 0;
    std::vector<double> payload;  // n_sensors x window, row-major

    Matrix features() const { return Matrix(n_sensors, window, payload); }
    bool operator==(const UploadMessage&) const = default;
};

/// In-process FIFO between the edge vote and the cloud consumer.
class UploadChannel {
public:
    void push(UploadMessage message) { queue_.push_back(std::move(message)); }
    std::optional<UploadMessage> pop();
    bool empty() const noexcept { return queue_.empty(); }
    std::size_t size() const noexcept { return queue_.size(); }

private:
    std::deque<UploadMessage> queue_;
};

/// Maps a raw N x T window to a class id (0 = normal).
using CloudClassifier = std::function<gcrl::Prediction(const Matrix& raw_window)>;

CloudClassifier gcrl_classifier(const gcrl::GcrlParams& params);

/// Verdicts of every edge for every window of a stream; independent of e.
struct EdgePass {
    std::vector<std::size_t> starts;                     // frame offsets
    std::vector<std::vector<edge::EdgeVerdict>> verdicts;  // [window][edge]
    std::vector<int> truth;                              // window class
    std::size_t n_frames = 0;
    std::size_t n_sensors = 0;
    std::size_t scale = 0;
    std::size_t stride = 0;
    double mean_time_ms = 0.0;  // edge-path wall clock per aggregated sample

    std::size_t s_total(std::size_t window) const;
};

/// Throws ConfigError unless the models cover every sensor exactly once with a
/// shared aggregation config.
void validate_models(std::span<const edge::EdgeModel> models, std::size_t n_sensors);

EdgePass run_edges(std::span<const dataset::SensorFrame> stream, std::span<const edge::EdgeModel> models,
                   std::size_t n_sensors);

struct WindowEvent {
    std::size_t index = 0;
    std::int64_t t = 0;
    std::vector<std::size_t> s;  // per edge, in model order
    std::size_t s_total = 0;
    bool uploaded = false;
    std::optional<int> prediction;  // cloud class, uploaded windows only
    std::optional<double> confidence;
    int truth = 0;  // window class (multi-class convention)

    bool operator==(const WindowEvent&) const = default;
};

struct EventLogHeader {
    std::size_t n_frames = 0;
    std::size_t n_sensors = 0;
    std::size_t scale = 0;
    std::size_t stride = 0;
    long e = 0;
    std::size_t n_classes = 2;
    std::vector<int> edges;
};

struct PipelineResult {
    RunMetrics metrics;
    EventLogHeader header;
    std::vector<WindowEvent> events;
    std::vector<UploadMessage> uploads;
};

/// Votes every window of `pass` at sensitivity `e`, ships uploads through the
/// channel to `cloud`, and tallies edge-stage and final metrics. Windows the
/// edges keep are predicted normal. With n_classes == 2 the truth is binarized.
PipelineResult evaluate_pass(const EdgePass& pass, std::span<const edge::EdgeModel> models, long e,
                             const CloudClassifier& cloud, std::size_t n_classes);

PipelineResult run_pipeline(std::span<const dataset::SensorFrame> stream, std::span<const edge::EdgeModel> models,
                            std::size_t n_sensors, long e, const CloudClassifier& cloud, std::size_t n_classes);

PipelineResult run_pipeline(const dataset::DatasetSplit& split, std::span<const edge::EdgeModel> models,
                            const gcrl::GcrlParams& cloud, long e);

/// Recomputes metrics from the event log alone.
RunMetrics replay(const EventLogHeader& header, std::span<const WindowEvent> events);

/// Largest e for which every abnormal window of `pass` is still uploaded.
long select_sensitivity(const EdgePass& pass);

/// GCRL training samples: raw window, window class (binarized for 2 classes),
/// abnormal windows repeated `resample_factor` times.
std::vector<gcrl::Sample> training_samples(std::span<const dataset::SensorFrame> train,
                                           const preprocess::AggregationConfig& aggregation, std::size_t n_sensors,
                                           std::size_t n_classes, std::size_t resample_factor);

struct SweepRow {
    double p_threshold = 0.0;
    long e = 0;
    std::size_t graph_edges = 0;
    RunMetrics metrics;
};

using ClassifierFactory = std::function<CloudClassifier(const graph::CorrelationGraph&)>;

/// One run per (p, e): the graph is rebuilt and the cloud model obtained per
/// p; the edge verdicts are computed once and re-voted per e.
std::vector<SweepRow> sweep(const dataset::DatasetSplit& split, std::span<const edge::EdgeModel> models,
                            std::span<const long> e_values, std::span<const double> p_values,
                            const graph::GraphOptions& base_options, const ClassifierFactory& factory,
                            std::size_t n_classes);

// Event log: JSON lines. The first record is the header, then one record per window.
void write_event_log(std::ostream& out, const EventLogHeader& header, std::span<const WindowEvent> events);
std::pair<EventLogHeader, std::vector<WindowEvent>> read_event_log(std::istream& in);

// Upload replay file: repeated [u32 LE header length][JSON header]
// [u32 LE payload length in bytes][payload as LE binary64].
void write_uploads(std::ostream& out, std::span<const UploadMessage> uploads);
std::vector<UploadMessage> read_uploads(std::istream& in);

}  // namespace cloudedge::harness
