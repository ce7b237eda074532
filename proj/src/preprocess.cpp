#include "cloudedge/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cloudedge/error.hpp"

namespace cloudedge::preprocess {

void validate(const AggregationConfig& config) {
    if (config.sampling_period < 1) throw ConfigError("sampling period must be >= 1");
    if (config.scale < 1) throw ConfigError("aggregation scale B must be >= 1");
    if (config.stride < 1) throw ConfigError("stride must be >= 1");
}

double aggregate(std::span<const double> window, std::size_t scale) {
    if (window.size() != scale + 1) {
        std::ostringstream os;
        os << "aggregate: window holds " << window.size() << " samples, expected B+1 = " << scale + 1;
        throw ShapeError(os.str());
    }
    // Shewchuk partials, correctly rounded
    std::vector<double> partials;
    double plain = 0.0;
    for (double v : window) {
        plain += v;
        double x = v;
        std::size_t used = 0;
        for (double y : partials) {
            if (std::abs(x) < std::abs(y)) std::swap(x, y);
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) partials[used++] = lo;
            x = hi;
        }
        partials.resize(used);
        partials.push_back(x);
    }
    if (!std::isfinite(plain)) return plain;
    std::size_t n = partials.size();
    double hi = partials[--n];
    double lo = 0.0;
    while (n > 0) {
        const double x = hi;
        const double y = partials[--n];
        hi = x + y;
        lo = y - (hi - x);
        if (lo != 0.0) break;
    }
    if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
        const double y = lo * 2.0;
        const double x = hi + y;
        if (y == x - hi) hi = x;
    }
    return hi;
}

std::vector<std::size_t> window_starts(std::size_t n_frames, const AggregationConfig& config) {
    validate(config);
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + config.window_length() <= n_frames; s += config.stride) starts.push_back(s);
    return starts;
}

std::vector<double> aggregate_sensor(std::span<const dataset::SensorFrame> frames, std::size_t sensor,
                                     const AggregationConfig& config) {
    std::vector<double> out;
    std::vector<double> buf(config.window_length());
    for (auto start : window_starts(frames.size(), config)) {
        for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = frames[start + k].values.at(sensor);
        out.push_back(aggregate(buf, config.scale));
    }
    return out;
}

int window_class(std::span<const dataset::SensorFrame> window) {
    std::map<int, std::size_t> counts;
    for (const auto& f : window)
        if (f.abnormal()) ++counts[f.label];
    int best = dataset::kNormalClass;
    std::size_t best_count = 0;
    for (const auto& [cls, c] : counts)
        if (c > best_count) {
            best = cls;
            best_count = c;
        }
    return best;
}

namespace {

struct LogData {
    std::vector<double> centered;  // log(y) - mean(log(y))
    double log_gm = 0.0;
};

LogData log_data(std::span<const double> data, double shift) {
    LogData out;
    out.centered.reserve(data.size());
    for (double x : data) {
        const double y = x + shift;
        if (!(y > 0.0)) throw NumericError("Box-Cox likelihood needs positive shifted data");
        out.centered.push_back(std::log(y));
    }
    double mean = 0.0;
    for (double l : out.centered) mean += l;
    mean /= static_cast<double>(out.centered.size());
    for (double& l : out.centered) l -= mean;
    out.log_gm = mean;
    return out;
}

// -(n/2) log var(z) for data scaled by its geometric mean
double normalized_llf(const std::vector<double>& centered, double lambda) {
    const auto n = static_cast<double>(centered.size());
    std::vector<double> z(centered.size());
    for (std::size_t i = 0; i < centered.size(); ++i)
        z[i] = lambda == 0.0 ? centered[i] : std::expm1(lambda * centered[i]) / lambda;
    double mean = 0.0;
    for (double v : z) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : z) ss += (v - mean) * (v - mean);
    const double var = ss / n;
    if (!(var > 0.0) || !std::isfinite(var)) return -std::numeric_limits<double>::infinity();
    return -0.5 * n * std::log(var);
}

}  // namespace

double boxcox_log_likelihood(std::span<const double> data, double shift, double lambda) {
    const auto ld = log_data(data, shift);
    return normalized_llf(ld.centered, lambda) - static_cast<double>(data.size()) * ld.log_gm;
}

BoxCoxParams fit_lambda(std::span<const double> aggregates) {
    if (aggregates.size() < kMinFitSamples) {
        std::ostringstream os;
        os << "fit_lambda: need at least " << kMinFitSamples << " training aggregates, got " << aggregates.size();
        throw ConfigError(os.str());
    }
    const auto [lo, hi] = std::minmax_element(aggregates.begin(), aggregates.end());
    BoxCoxParams params;
    params.shift = std::max(0.0, kShiftEpsilon - *lo);
    if (*lo == *hi) {
        params.lambda = 1.0;
        params.degenerate = true;
        return params;
    }

    const auto ld = log_data(aggregates, params.shift);
    params.reference = std::exp(ld.log_gm);
    auto llf = [&](double lambda) { return normalized_llf(ld.centered, lambda); };

    constexpr double kGridStep = 0.01;
    constexpr int kGridPoints = 1001;
    double best_lambda = kLambdaMin;
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < kGridPoints; ++k) {
        const double lambda = kLambdaMin + kGridStep * k;
        const double v = llf(lambda);
        if (v > best) {
            best = v;
            best_lambda = lambda;
        }
    }

    // golden-section on the bracket around the best grid point
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::max(kLambdaMin, best_lambda - kGridStep);
    double b = std::min(kLambdaMax, best_lambda + kGridStep);
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = llf(c);
    double fd = llf(d);
    while (b - a > 1e-10) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = llf(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = llf(d);
        }
    }
    const double refined = 0.5 * (a + b);
    params.lambda = llf(refined) >= best ? refined : best_lambda;
    return params;
}

Transformed transform(double x, const BoxCoxParams& params) {
    Transformed out;
    double y = x + params.shift;
    if (!(y > 0.0)) {
        y = kShiftEpsilon;
        out.clamped = true;
    }
    out.value = params.lambda == 0.0 ? std::log(y) : std::expm1(params.lambda * std::log(y)) / params.lambda;
    return out;
}

Transformed transform_relative(double x, const BoxCoxParams& params) {
    Transformed out;
    double y = x + params.shift;
    if (!(y > 0.0)) {
        y = kShiftEpsilon;
        out.clamped = true;
    }
    const double l = std::log(y) - std::log(params.reference);
    out.value = params.lambda == 0.0 ? l : std::expm1(params.lambda * l) / params.lambda;
    return out;
}

// [{"edge": 1, "sensor": "S01", "lambda": .., "shift": .., "degenerate": false}, ...]
nlohmann::json to_json(const BoxCoxTable& table) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [key, p] : table)
        arr.push_back({{"edge", key.first},
                       {"sensor", key.second},
                       {"lambda", p.lambda},
                       {"shift", p.shift},
                       {"degenerate", p.degenerate},
                       {"reference", p.reference}});
    return arr;
}

BoxCoxTable boxcox_table_from_json(const nlohmann::json& doc) {
    BoxCoxTable table;
    try {
        for (const auto& e : doc) {
            BoxCoxParams p;
            p.lambda = e.at("lambda").get<double>();
            p.shift = e.at("shift").get<double>();
            p.degenerate = e.value("degenerate", false);
            p.reference = e.value("reference", 1.0);
            table[{e.at("edge").get<int>(), e.at("sensor").get<std::string>()}] = p;
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("Box-Cox table: ") + e.what());
    }
    return table;
}

}  // namespace cloudedge::preprocess
