#include "cloudedge/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "cloudedge/error.hpp"

namespace cloudedge::dataset {

void validate(const SyntheticSpec& spec) {
    if (spec.n_sensors == 0) throw ConfigError("synthetic: n_sensors must be >= 1");
    if (spec.n_edges == 0 || spec.n_edges > spec.n_sensors)
        throw ConfigError("synthetic: n_edges must lie in [1, n_sensors]");
    if (spec.duration <= 0) throw ConfigError("synthetic: duration must be positive");
    if (spec.train_duration < 0 || spec.train_duration > spec.duration)
        throw ConfigError("synthetic: train_duration must lie in [0, duration]");
    const auto& b = spec.base;
    if (!(std::abs(b.ar_coefficient) < 1.0)) throw ConfigError("synthetic: |ar_coefficient| must be < 1");
    if (b.driver_std < 0.0 || b.noise_std < 0.0) throw ConfigError("synthetic: standard deviations must be >= 0");
    if (b.gain_min > b.gain_max) throw ConfigError("synthetic: gain_min > gain_max");

    for (std::size_t w = 0; w < spec.attack_windows.size(); ++w) {
        const auto& a = spec.attack_windows[w];
        std::ostringstream where;
        where << "synthetic: attack window " << w << ": ";
        if (a.start < 0 || a.end > spec.duration || a.start >= a.end)
            throw ConfigError(where.str() + "must satisfy 0 <= start < end <= duration");
        if (a.attack_type < 1) throw ConfigError(where.str() + "attack_type must be >= 1");
        if (a.sensors.empty()) throw ConfigError(where.str() + "affected sensor set is empty");
        for (auto s : a.sensors)
            if (s >= spec.n_sensors) throw ConfigError(where.str() + "sensor index out of range");
        for (std::size_t v = 0; v < w; ++v) {
            const auto& o = spec.attack_windows[v];
            const bool overlap = a.start < o.end && o.start < a.end;
            if (overlap && o.attack_type != a.attack_type) {
                std::ostringstream os;
                os << where.str() << "overlaps window " << v << " with a different attack type";
                throw ConfigError(os.str());
            }
        }
    }
}

double stationary_std(const BaseProcess& base, double gain) {
    const double phi = base.ar_coefficient;
    const double driver_var = base.driver_std * base.driver_std / (1.0 - phi * phi);
    return std::sqrt(gain * gain * driver_var + base.noise_std * base.noise_std);
}

DatasetSplit generate_synthetic(const SyntheticSpec& spec) {
    validate(spec);
    const std::size_t n = spec.n_sensors;
    const auto& base = spec.base;

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    DatasetSplit split;
    split.sensor_names.reserve(n);
    split.edge_assignment.reserve(n);
    std::vector<double> level(n), gain(n), sigma(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::ostringstream name;
        name << 'S' << (i + 1 < 10 ? "0" : "") << i + 1;
        split.sensor_names.push_back(name.str());
        split.edge_assignment.push_back(static_cast<int>(1 + i * spec.n_edges / n));
        level[i] = base.level + base.level_spread * (2.0 * unit(rng) - 1.0);
        gain[i] = base.gain_min + (base.gain_max - base.gain_min) * unit(rng);
        sigma[i] = stationary_std(base, gain[i]);
    }

    // per-second perturbation and label
    const auto duration = static_cast<std::size_t>(spec.duration);
    std::vector<int> label(duration, kNormalClass);
    std::vector<std::vector<double>> shift(duration);
    for (const auto& a : spec.attack_windows) {
        for (auto t = static_cast<std::size_t>(a.start); t < static_cast<std::size_t>(a.end); ++t) {
            label[t] = a.attack_type;
            if (shift[t].empty()) shift[t].assign(n, 0.0);
            for (auto s : a.sensors) shift[t][s] = a.magnitude * sigma[s];
        }
    }

    const double phi = base.ar_coefficient;
    std::vector<double> driver(spec.n_edges);
    for (auto& d : driver) d = gauss(rng) * base.driver_std / std::sqrt(1.0 - phi * phi);

    std::vector<SensorFrame> frames;
    frames.reserve(duration);
    for (std::size_t t = 0; t < duration; ++t) {
        for (auto& d : driver) d = phi * d + base.driver_std * gauss(rng);
        SensorFrame f;
        f.timestamp = static_cast<std::int64_t>(t);
        f.label = label[t];
        f.values.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto edge = static_cast<std::size_t>(split.edge_assignment[i] - 1);
            f.values[i] = level[i] + gain[i] * driver[edge] + base.noise_std * gauss(rng);
            if (!shift[t].empty()) f.values[i] += shift[t][i];
        }
        frames.push_back(std::move(f));
    }

    const auto n_train = static_cast<std::ptrdiff_t>(spec.train_duration);
    split.train.assign(frames.begin(), frames.begin() + n_train);
    split.test.assign(frames.begin() + n_train, frames.end());
    return split;
}

SyntheticSpec default_synthetic_spec(std::uint64_t seed) {
    constexpr std::int64_t kWindow = 11;  // B = 10
    SyntheticSpec spec;
    spec.seed = seed;
    const std::vector<std::vector<std::size_t>> targets = {
        {0, 1, 2, 3, 4, 5},  {4, 5, 6, 7, 8, 9},  {6, 7, 8, 9, 10, 11},
        {0, 2, 4, 6, 8, 10}, {1, 3, 5, 7, 9, 11}, {0, 1, 2, 9, 10, 11},
    };
    const std::vector<double> magnitude = {6.0, 7.0, 6.5, 8.0, 6.0, 7.5};
    auto add = [&](std::int64_t first_window, std::int64_t windows, std::size_t type_index) {
        AttackWindow a;
        a.start = first_window * kWindow;
        a.end = a.start + windows * kWindow;
        a.attack_type = static_cast<int>(type_index) + 1;
        a.sensors = targets[type_index];
        a.magnitude = magnitude[type_index];
        spec.attack_windows.push_back(a);
    };
    // training region: windows [0, 1100), two episodes per type
    for (std::int64_t j = 0; j < 12; ++j) add(50 + j * 85, 10, static_cast<std::size_t>(j % 6));
    // test region starts at window 1100
    const std::int64_t test_first = spec.train_duration / kWindow;
    for (std::int64_t j = 0; j < 6; ++j) add(test_first + 40 + j * 110, 10, static_cast<std::size_t>(j));
    return spec;
}

namespace {

template <typename T>
void read_opt(const nlohmann::json& doc, const char* key, T& out) {
    if (doc.contains(key)) out = doc.at(key).get<T>();
}

}  // namespace

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& doc) {
    SyntheticSpec spec;
    try {
        read_opt(doc, "n_sensors", spec.n_sensors);
        read_opt(doc, "n_edges", spec.n_edges);
        read_opt(doc, "duration", spec.duration);
        read_opt(doc, "train_duration", spec.train_duration);
        read_opt(doc, "seed", spec.seed);
        if (doc.contains("base_process")) {
            const auto& b = doc.at("base_process");
            read_opt(b, "ar_coefficient", spec.base.ar_coefficient);
            read_opt(b, "driver_std", spec.base.driver_std);
            read_opt(b, "noise_std", spec.base.noise_std);
            read_opt(b, "level", spec.base.level);
            read_opt(b, "level_spread", spec.base.level_spread);
            read_opt(b, "gain_min", spec.base.gain_min);
            read_opt(b, "gain_max", spec.base.gain_max);
        }
        if (doc.contains("attack_windows")) {
            for (const auto& w : doc.at("attack_windows")) {
                AttackWindow a;
                a.start = w.at("start").get<std::int64_t>();
                a.end = w.at("end").get<std::int64_t>();
                a.attack_type = w.at("attack_type").get<int>();
                a.sensors = w.at("sensors").get<std::vector<std::size_t>>();
                read_opt(w, "magnitude", a.magnitude);
                spec.attack_windows.push_back(std::move(a));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("synthetic spec: ") + e.what());
    }
    validate(spec);
    return spec;
}

nlohmann::json to_json(const SyntheticSpec& spec) {
    nlohmann::json windows = nlohmann::json::array();
    for (const auto& a : spec.attack_windows)
        windows.push_back({{"start", a.start},
                           {"end", a.end},
                           {"attack_type", a.attack_type},
                           {"sensors", a.sensors},
                           {"magnitude", a.magnitude}});
    const auto& b = spec.base;
    return {{"n_sensors", spec.n_sensors},
            {"n_edges", spec.n_edges},
            {"duration", spec.duration},
            {"train_duration", spec.train_duration},
            {"seed", spec.seed},
            {"base_process",
             {{"ar_coefficient", b.ar_coefficient},
              {"driver_std", b.driver_std},
              {"noise_std", b.noise_std},
              {"level", b.level},
              {"level_spread", b.level_spread},
              {"gain_min", b.gain_min},
              {"gain_max", b.gain_max}}},
            {"attack_windows", std::move(windows)}};
}

}  // namespace cloudedge::dataset
