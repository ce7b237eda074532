#include "cloudedge/edge_detector.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "cloudedge/error.hpp"

namespace cloudedge::edge {

namespace {

struct Moments {
    std::size_t n = 0;
    double mean = 0.0;
    double sigma = 0.0;  // sqrt of the mean squared deviation
};

Moments moments(const std::vector<double>& values, const std::vector<int>& labels, int wanted) {
    Moments m;
    for (std::size_t j = 0; j < values.size(); ++j)
        if (labels[j] == wanted && !std::isnan(values[j])) {
            m.mean += values[j];
            ++m.n;
        }
    if (m.n == 0) return m;
    m.mean /= static_cast<double>(m.n);
    double ss = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j)
        if (labels[j] == wanted && !std::isnan(values[j])) ss += (values[j] - m.mean) * (values[j] - m.mean);
    m.sigma = std::sqrt(ss / static_cast<double>(m.n));
    return m;
}

}  // namespace

EdgeModel fit_edge_model(const EdgeTrainingData& data) {
    const std::size_t m = data.sensors.size();
    if (data.values.size() != m || data.names.size() != m)
        throw ShapeError("fit_edge_model: sensors, names and values disagree in length");
    if (m == 0 || data.labels.empty()) throw ConfigError("fit_edge_model: empty training set");
    for (const auto& v : data.values)
        if (v.size() != data.labels.size()) throw ShapeError("fit_edge_model: one label per window required");

    std::size_t n_normal = 0;
    std::size_t n_abnormal = 0;
    for (int y : data.labels) {
        if (y == dataset::kBinaryNormal)
            ++n_normal;
        else if (y == dataset::kBinaryAbnormal)
            ++n_abnormal;
        else
            throw ConfigError("fit_edge_model: labels must be binary (0 abnormal, 1 normal)");
    }
    std::ostringstream where;
    where << "fit_edge_model: edge " << data.edge;
    if (n_normal == 0) throw ConfigError(where.str() + " has no normal training windows");
    if (n_abnormal == 0) throw ConfigError(where.str() + " has no abnormal training windows");

    EdgeModel model;
    model.edge = data.edge;
    const auto total = static_cast<double>(n_normal + n_abnormal);
    model.priors.normal = static_cast<double>(n_normal) / total;
    model.priors.abnormal = 1.0 - model.priors.normal;

    double pooled_ss = 0.0;
    std::size_t pooled_n = 0;
    std::vector<Moments> abnormal(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto no = moments(data.values[i], data.labels, dataset::kBinaryNormal);
        if (no.n == 0) throw ConfigError(where.str() + ": sensor '" + data.names[i] + "' has no normal samples");
        abnormal[i] = moments(data.values[i], data.labels, dataset::kBinaryAbnormal);
        if (abnormal[i].n > 0) {
            pooled_ss += abnormal[i].sigma * abnormal[i].sigma * static_cast<double>(abnormal[i].n);
            pooled_n += abnormal[i].n;
        }
        SensorGaussians g;
        g.sensor = data.sensors[i];
        g.name = data.names[i];
        g.mu_no = no.mean;
        g.sigma_no = std::max(no.sigma, kSigmaFloor);
        model.sensors.push_back(std::move(g));
    }
    const double pooled_sigma = pooled_n > 0 ? std::sqrt(pooled_ss / static_cast<double>(pooled_n)) : 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        auto& g = model.sensors[i];
        if (abnormal[i].n > 0) {
            g.mu_ab = abnormal[i].mean;
            g.sigma_ab = std::max(abnormal[i].sigma, kSigmaFloor);
        } else {
            g.abnormal_borrowed = true;
            g.mu_ab = g.mu_no + kBorrowedMeanOffset * g.sigma_no;
            g.sigma_ab = std::max(pooled_n > 0 ? pooled_sigma : g.sigma_no, kSigmaFloor);
        }
    }
    model.boxcox.assign(m, preprocess::BoxCoxParams{});
    return model;
}

EdgeModel fit_edge(std::span<const dataset::SensorFrame> train, const dataset::DatasetSplit& layout, int edge,
                   const preprocess::AggregationConfig& aggregation) {
    preprocess::validate(aggregation);
    EdgeTrainingData data;
    data.edge = edge;
    data.sensors = layout.sensors_of_edge(edge);
    if (data.sensors.empty()) throw ConfigError("fit_edge: edge has no sensors");

    const auto starts = preprocess::window_starts(train.size(), aggregation);
    for (auto s : starts) {
        const int cls = preprocess::window_class(train.subspan(s, aggregation.window_length()));
        data.labels.push_back(dataset::to_binary_label(cls));
    }

    std::vector<preprocess::BoxCoxParams> boxcox;
    for (auto sensor : data.sensors) {
        data.names.push_back(layout.sensor_names[sensor]);
        auto aggregates = preprocess::aggregate_sensor(train, sensor, aggregation);
        const auto params = preprocess::fit_lambda(aggregates);
        for (double& x : aggregates) x = preprocess::transform_relative(x, params).value;
        data.values.push_back(std::move(aggregates));
        boxcox.push_back(params);
    }
    auto model = fit_edge_model(data);
    model.boxcox = std::move(boxcox);
    model.aggregation = aggregation;
    return model;
}

std::vector<EdgeModel> fit_all_edges(const dataset::DatasetSplit& split,
                                     const preprocess::AggregationConfig& aggregation) {
    std::vector<EdgeModel> models;
    for (int edge : split.edge_ids()) models.push_back(fit_edge(split.train, split, edge, aggregation));
    return models;
}

double log_gaussian_density(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

bool classify_window(double transformed, const SensorGaussians& g, const Priors& priors) {
    const double normal = log_gaussian_density(transformed, g.mu_no, g.sigma_no) + std::log(priors.normal);
    const double abnormal = log_gaussian_density(transformed, g.mu_ab, g.sigma_ab) + std::log(priors.abnormal);
    return abnormal >= normal;
}

EdgeVerdict detect_edge(std::span<const dataset::SensorFrame> window, const EdgeModel& model) {
    const auto& agg = model.aggregation;
    if (window.size() != agg.window_length()) {
        std::ostringstream os;
        os << "detect_edge: window spans " << window.size() << " frames, expected " << agg.window_length();
        throw ShapeError(os.str());
    }
    EdgeVerdict v;
    v.t = window.front().timestamp;
    v.edge = model.edge;
    v.flags.reserve(model.size());
    v.payload.reserve(model.size());
    std::vector<double> raw(window.size());
    for (std::size_t i = 0; i < model.size(); ++i) {
        const auto& g = model.sensors[i];
        for (std::size_t k = 0; k < window.size(); ++k) raw[k] = window[k].values.at(g.sensor);
        const auto x = preprocess::transform_relative(preprocess::aggregate(raw, agg.scale), model.boxcox[i]);
        if (x.clamped) ++v.clamped;
        const bool flag = classify_window(x.value, g, model.priors);
        v.sensors.push_back(g.sensor);
        v.flags.push_back(flag);
        if (flag) ++v.s;
        v.payload.push_back(raw);
    }
    return v;
}

VoteDecision network_vote(std::span<const EdgeVerdict> verdicts, long e) {
    if (verdicts.empty()) throw ConfigError("network_vote: no verdicts");
    VoteDecision d;
    d.t = verdicts.front().t;
    for (const auto& v : verdicts) {
        if (v.t != d.t) {
            std::ostringstream os;
            os << "network_vote: edge " << v.edge << " reports window " << v.t << ", expected " << d.t;
            throw ConfigError(os.str());
        }
        d.s_total += v.s;
        d.n_sensors += v.sensors.size();
        if (!v.payload.empty()) d.window = v.payload.front().size();
    }
    d.upload = static_cast<long>(d.s_total) > e;
    if (!d.upload) return d;
    d.payload.assign(d.n_sensors * d.window, 0.0);
    for (const auto& v : verdicts)
        for (std::size_t i = 0; i < v.sensors.size(); ++i) {
            if (v.sensors[i] >= d.n_sensors || v.payload[i].size() != d.window)
                throw ShapeError("network_vote: verdict payload does not match the network layout");
            std::copy(v.payload[i].begin(), v.payload[i].end(),
                      d.payload.begin() + static_cast<std::ptrdiff_t>(v.sensors[i] * d.window));
        }
    return d;
}

nlohmann::json to_json(const EdgeModel& model) {
    nlohmann::json sensors = nlohmann::json::array();
    for (std::size_t i = 0; i < model.size(); ++i) {
        const auto& g = model.sensors[i];
        const auto& b = model.boxcox[i];
        sensors.push_back({{"index", g.sensor},
                           {"name", g.name},
                           {"mu_no", g.mu_no},
                           {"sigma_no", g.sigma_no},
                           {"mu_ab", g.mu_ab},
                           {"sigma_ab", g.sigma_ab},
                           {"abnormal_borrowed", g.abnormal_borrowed},
                           {"lambda", b.lambda},
                           {"shift", b.shift},
                           {"degenerate", b.degenerate},
                           {"reference", b.reference}});
    }
    const auto& a = model.aggregation;
    return {{"edge", model.edge},
            {"priors", {{"normal", model.priors.normal}, {"abnormal", model.priors.abnormal}}},
            {"aggregation", {{"sampling_period", a.sampling_period}, {"B", a.scale}, {"stride", a.stride}}},
            {"sensors", std::move(sensors)}};
}

EdgeModel edge_model_from_json(const nlohmann::json& doc) {
    EdgeModel model;
    try {
        model.edge = doc.at("edge").get<int>();
        model.priors.normal = doc.at("priors").at("normal").get<double>();
        model.priors.abnormal = doc.at("priors").at("abnormal").get<double>();
        const auto& a = doc.at("aggregation");
        model.aggregation.sampling_period = a.at("sampling_period").get<std::int64_t>();
        model.aggregation.scale = a.at("B").get<std::size_t>();
        model.aggregation.stride = a.at("stride").get<std::size_t>();
        for (const auto& s : doc.at("sensors")) {
            SensorGaussians g;
            g.sensor = s.at("index").get<std::size_t>();
            g.name = s.at("name").get<std::string>();
            g.mu_no = s.at("mu_no").get<double>();
            g.sigma_no = s.at("sigma_no").get<double>();
            g.mu_ab = s.at("mu_ab").get<double>();
            g.sigma_ab = s.at("sigma_ab").get<double>();
            g.abnormal_borrowed = s.value("abnormal_borrowed", false);
            preprocess::BoxCoxParams b;
            b.lambda = s.at("lambda").get<double>();
            b.shift = s.at("shift").get<double>();
            b.degenerate = s.value("degenerate", false);
            b.reference = s.at("reference").get<double>();
            model.sensors.push_back(std::move(g));
            model.boxcox.push_back(b);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("edge model: ") + e.what());
    }
    return model;
}

}  // namespace cloudedge::edge
