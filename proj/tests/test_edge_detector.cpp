#include <doctest.h>

#include <cmath>
#include <random>

#include "cloudedge/edge_detector.hpp"
#include "cloudedge/error.hpp"
#include "cloudedge/synthetic.hpp"
#include "support.hpp"

using namespace cloudedge;
using namespace cloudedge::edge;

namespace {

constexpr int kNo = dataset::kBinaryNormal;
constexpr int kAb = dataset::kBinaryAbnormal;

EdgeTrainingData one_sensor(std::vector<double> values, std::vector<int> labels) {
    EdgeTrainingData d;
    d.sensors = {0};
    d.names = {"S"};
    d.values = {std::move(values)};
    d.labels = std::move(labels);
    return d;
}

// Raw window whose aggregate maps to `target` under the sensor's Box-Cox parameters.
std::vector<double> window_for(double target, const preprocess::BoxCoxParams& p, std::size_t len) {
    const double rel = p.lambda == 0.0 ? std::exp(target) : std::pow(1.0 + p.lambda * target, 1.0 / p.lambda);
    const double x = p.reference * rel - p.shift;
    return std::vector<double>(len, x / static_cast<double>(len));
}

struct Fixture {
    dataset::DatasetSplit split = dataset::generate_synthetic(dataset::default_synthetic_spec(1));
    preprocess::AggregationConfig agg;
    std::vector<EdgeModel> models = fit_all_edges(split, agg);
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

std::vector<dataset::SensorFrame> frames_from(const std::vector<std::vector<double>>& per_sensor, std::int64_t t0) {
    const std::size_t len = per_sensor.front().size();
    std::vector<dataset::SensorFrame> w(len);
    for (std::size_t k = 0; k < len; ++k) {
        w[k].timestamp = t0 + static_cast<std::int64_t>(k);
        for (const auto& s : per_sensor) w[k].values.push_back(s[k]);
    }
    return w;
}

}  // namespace

TEST_SUITE("edge_detector") {

TEST_CASE("constant classes hit the sigma floor") {
    const auto m = fit_edge_model(one_sensor({0, 0, 0, 0, 2, 2}, {kNo, kNo, kNo, kNo, kAb, kAb}));
    const auto& g = m.sensors[0];
    CHECK(g.mu_no == 0.0);
    CHECK(g.sigma_no == kSigmaFloor);
    CHECK(g.mu_ab == 2.0);
    CHECK(g.sigma_ab == kSigmaFloor);
    CHECK(m.priors.normal == doctest::Approx(2.0 / 3.0));
    CHECK(m.priors.abnormal == doctest::Approx(1.0 / 3.0));
    CHECK(m.priors.normal + m.priors.abnormal == 1.0);
}

TEST_CASE("sigma uses divisor n") {
    const auto m = fit_edge_model(one_sensor({1, 3, 10}, {kNo, kNo, kAb}));
    CHECK(m.sensors[0].mu_no == 2.0);
    CHECK(m.sensors[0].sigma_no == 1.0);
}

TEST_CASE("large gaussian class recovers its generator") {
    auto normal = testing::normal_sample(1000, 3.0, 0.7, 21);
    auto abnormal = testing::normal_sample(1000, -2.0, 1.8, 22);
    std::vector<double> values = normal;
    values.insert(values.end(), abnormal.begin(), abnormal.end());
    std::vector<int> labels(1000, kNo);
    labels.resize(2000, kAb);
    const auto g = fit_edge_model(one_sensor(values, labels)).sensors[0];
    CHECK(g.mu_no == doctest::Approx(3.0).epsilon(0.05));
    CHECK(g.sigma_no == doctest::Approx(0.7).epsilon(0.05));
    CHECK(g.mu_ab == doctest::Approx(-2.0).epsilon(0.05));
    CHECK(g.sigma_ab == doctest::Approx(1.8).epsilon(0.05));
}

TEST_CASE("fit errors and borrowed abnormal class") {
    CHECK_THROWS_AS(fit_edge_model(one_sensor({}, {})), ConfigError);
    CHECK_THROWS_AS(fit_edge_model(one_sensor({1, 2}, {kNo, kNo})), ConfigError);
    CHECK_THROWS_AS(fit_edge_model(one_sensor({1, 2}, {kAb, kAb})), ConfigError);

    EdgeTrainingData d;
    d.sensors = {0, 1};
    d.names = {"A", "B"};
    const double nan = std::nan("");
    d.values = {{0.0, 2.0, 10.0, 14.0}, {1.0, 3.0, nan, nan}};
    d.labels = {kNo, kNo, kAb, kAb};
    const auto m = fit_edge_model(d);
    CHECK_FALSE(m.sensors[0].abnormal_borrowed);
    const auto& b = m.sensors[1];
    CHECK(b.abnormal_borrowed);
    CHECK(b.mu_no == 2.0);
    CHECK(b.sigma_no == 1.0);
    CHECK(b.mu_ab == 2.0 + 6.0 * 1.0);
    CHECK(b.sigma_ab == m.sensors[0].sigma_ab);  // pooled over the sensors that have abnormal data
}

TEST_CASE("classify_window decision rule") {
    SensorGaussians g;
    g.mu_no = 0.0;
    g.mu_ab = 4.0;
    g.sigma_no = g.sigma_ab = 1.0;
    const Priors equal{0.5, 0.5};
    CHECK(classify_window(2.0, g, equal));  // exact tie goes to abnormal
    CHECK_FALSE(classify_window(0.0, g, equal));
    CHECK(classify_window(4.0, g, equal));

    // closed form: -x^2/2 + log .95 = -(x-4)^2/2 + log .05
    const Priors skewed{0.95, 0.05};
    const double boundary = (8.0 - std::log(0.05 / 0.95)) / 4.0;
    for (double x = 0.0; x <= 4.0; x += 0.001) {
        if (std::abs(x - boundary) < 1e-9) continue;
        CHECK(classify_window(x, g, skewed) == (x > boundary));
    }
    // scaling both scores by a constant leaves the decision unchanged
    for (double x = 0.0; x <= 4.0; x += 0.01)
        CHECK(classify_window(x, g, skewed) == classify_window(x, g, Priors{0.95 * 7.5, 0.05 * 7.5}));
    // extreme values stay finite in log space
    CHECK(classify_window(1e6, g, skewed));
    CHECK_FALSE(classify_window(-1e6, g, skewed));
}

TEST_CASE("detect_edge counts flagged sensors") {
    EdgeModel m;
    m.edge = 2;
    m.aggregation.scale = 4;
    m.aggregation.stride = 5;
    m.priors = {0.9, 0.1};
    for (std::size_t i = 0; i < 5; ++i) {
        SensorGaussians g;
        g.sensor = i;
        g.name = "S" + std::to_string(i);
        g.mu_no = 0.1 * static_cast<double>(i);
        g.sigma_no = 0.02;
        g.mu_ab = g.mu_no + 0.3;
        g.sigma_ab = 0.05;
        m.sensors.push_back(g);
        m.boxcox.push_back({0.5, 0.0, false, 100.0});
    }
    std::vector<std::vector<double>> raw;
    for (std::size_t i = 0; i < 5; ++i) raw.push_back(window_for(m.sensors[i].mu_no, m.boxcox[i], 5));
    auto v = detect_edge(frames_from(raw, 40), m);
    CHECK(v.s == 0);
    CHECK(v.t == 40);
    CHECK(v.edge == 2);

    for (std::size_t i : {0, 2, 4}) raw[i] = window_for(m.sensors[i].mu_ab, m.boxcox[i], 5);
    v = detect_edge(frames_from(raw, 40), m);
    CHECK(v.s == 3);
    CHECK(v.flags == std::vector<bool>{true, false, true, false, true});
    CHECK(v.payload[2] == raw[2]);

    const auto frames = frames_from(raw, 0);
    CHECK_THROWS_AS(detect_edge(std::span(frames).first(4), m), ShapeError);
}

TEST_CASE("detect_edge agrees with a per-sensor recount") {
    const auto& f = fixture();
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::size_t> pick(0, f.split.test.size() / 11 - 1);
    for (int trial = 0; trial < 200; ++trial) {
        const auto start = pick(rng) * 11;
        const auto window = std::span(f.split.test).subspan(start, 11);
        for (const auto& m : f.models) {
            const auto v = detect_edge(window, m);
            std::size_t s = 0;
            for (std::size_t i = 0; i < m.size(); ++i) {
                std::vector<double> raw;
                for (const auto& fr : window) raw.push_back(fr.values[m.sensors[i].sensor]);
                const double x = preprocess::transform_relative(preprocess::aggregate(raw, 10), m.boxcox[i]).value;
                s += classify_window(x, m.sensors[i], m.priors);
            }
            CHECK(v.s == s);
        }
    }
}

TEST_CASE("network vote") {
    EdgeVerdict a;
    a.t = 11;
    a.edge = 1;
    a.sensors = {0, 1};
    a.flags = {true, true};
    a.s = 2;
    a.payload = {{1, 2}, {3, 4}};
    EdgeVerdict b = a;
    b.edge = 2;
    b.sensors = {2};
    b.flags = {true};
    b.s = 1;
    b.payload = {{5, 6}};
    const std::vector<EdgeVerdict> vs = {a, b};

    CHECK_FALSE(network_vote(vs, 3).upload);  // s_total == e
    const auto up = network_vote(vs, 2);
    CHECK(up.upload);
    CHECK(up.s_total == 3);
    CHECK(up.payload == std::vector<double>{1, 2, 3, 4, 5, 6});
    CHECK(up.window == 2);
    CHECK(up.n_sensors == 3);

    b.t = 22;
    const std::vector<EdgeVerdict> bad = {a, b};
    CHECK_THROWS_AS(network_vote(bad, 0), ConfigError);
}

TEST_CASE("upload count never grows with e") {
    const auto& f = fixture();
    std::vector<std::vector<EdgeVerdict>> windows;
    for (auto s : preprocess::window_starts(f.split.test.size(), f.agg)) {
        std::vector<EdgeVerdict> vs;
        for (const auto& m : f.models) vs.push_back(detect_edge(std::span(f.split.test).subspan(s, 11), m));
        windows.push_back(std::move(vs));
    }
    std::vector<bool> prev(windows.size(), true);
    std::size_t prev_count = windows.size() + 1;
    for (long e = -1; e <= 13; ++e) {
        std::size_t count = 0;
        for (std::size_t w = 0; w < windows.size(); ++w) {
            const bool up = network_vote(windows[w], e).upload;
            if (up) CHECK(prev[w]);  // subset of the previous e
            prev[w] = up;
            count += up;
        }
        CHECK(count <= prev_count);
        prev_count = count;
    }
}

TEST_CASE("edge model json round trip") {
    const auto& m = fixture().models.front();
    const auto back = edge_model_from_json(to_json(m));
    CHECK(to_json(back) == to_json(m));
    CHECK(back.boxcox[0].reference == m.boxcox[0].reference);
    CHECK_THROWS_AS(edge_model_from_json(nlohmann::json::object()), ConfigError);
}

}  // TEST_SUITE
