#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cloudedge/dataset.hpp"
#include "cloudedge/preprocess.hpp"

namespace cloudedge::edge {

inline constexpr double kSigmaFloor = 1e-9;
/// Offset of the substitute abnormal mean, in normal-class standard deviations.
inline constexpr double kBorrowedMeanOffset = 6.0;

struct Priors {
    double normal = 0.5;    // p(y=1)
    double abnormal = 0.5;  // p(y=0)
};

/// Class-conditional Gaussians of one sensor's transformed aggregates.
struct SensorGaussians {
    std::size_t sensor = 0;  // global sensor index
    std::string name;
    double mu_no = 0.0;
    double sigma_no = 1.0;
    double mu_ab = 0.0;
    double sigma_ab = 1.0;
    bool abnormal_borrowed = false;  // no abnormal samples; parameters substituted
};

struct EdgeModel {
    int edge = 1;
    std::vector<SensorGaussians> sensors;
    std::vector<preprocess::BoxCoxParams> boxcox;  // parallel to `sensors`
    Priors priors;
    preprocess::AggregationConfig aggregation;

    std::size_t size() const noexcept { return sensors.size(); }
};

/// Preprocessed training aggregates of one edge. NaN entries are skipped.
struct EdgeTrainingData {
    int edge = 1;
    std::vector<std::size_t> sensors;
    std::vector<std::string> names;
    std::vector<std::vector<double>> values;  // [sensor][window]
    std::vector<int> labels;                  // binary convention, one per window
};

/// MLE Gaussians per class (divisor n, sigma floored) and class-proportion priors.
/// The returned model carries identity Box-Cox parameters.
EdgeModel fit_edge_model(const EdgeTrainingData& data);

/// Aggregates, fits one Box-Cox lambda per sensor, transforms, then fits the
/// Gaussians. Window labels are abnormal iff any frame is abnormal.
EdgeModel fit_edge(std::span<const dataset::SensorFrame> train, const dataset::DatasetSplit& layout, int edge,
                   const preprocess::AggregationConfig& aggregation);

std::vector<EdgeModel> fit_all_edges(const dataset::DatasetSplit& split, const preprocess::AggregationConfig& aggregation);

double log_gaussian_density(double x, double mu, double sigma);

/// True (abnormal) iff f_ab(x) p(y=0) >= f_no(x) p(y=1), compared in log space.
bool classify_window(double transformed, const SensorGaussians& g, const Priors& priors);

struct EdgeVerdict {
    std::int64_t t = 0;
    int edge = 1;
    std::vector<std::size_t> sensors;
    std::vector<bool> flags;
    std::size_t s = 0;
    std::vector<std::vector<double>> payload;  // [sensor][sample], raw values
    std::size_t clamped = 0;                    // transforms that hit the epsilon clamp
};

/// Runs one edge over a window of exactly B + 1 frames.
EdgeVerdict detect_edge(std::span<const dataset::SensorFrame> window, const EdgeModel& model);

struct VoteDecision {
    std::int64_t t = 0;
    std::size_t s_total = 0;
    bool upload = false;
    std::size_t n_sensors = 0;
    std::size_t window = 0;
    std::vector<double> payload;  // n_sensors x window, row-major by global sensor index; empty unless upload
};

/// Uploads the raw window of every sensor iff the network-wide abnormal count exceeds e.
VoteDecision network_vote(std::span<const EdgeVerdict> verdicts, long e);

nlohmann::json to_json(const EdgeModel& model);
EdgeModel edge_model_from_json(const nlohmann::json& doc);

}  // namespace cloudedge::edge
