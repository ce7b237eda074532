#include "cloudedge/gcrl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef __GLIBC__
#include <malloc.h>
#endif
#include <numeric>
#include <random>
#include <sstream>

#include "cloudedge/checkpoint.hpp"
#include "cloudedge/error.hpp"

namespace cloudedge::gcrl {

using numerics::Tape;
using numerics::Var;

void validate(const GcrlConfig& config) {
    if (config.layers < 1) throw ConfigError("gcrl: layers must be >= 1");
    if (config.hidden < 1) throw ConfigError("gcrl: hidden width must be >= 1");
    if (config.n_classes < 2) throw ConfigError("gcrl: n_classes must be >= 2");
    if (config.window < 1) throw ConfigError("gcrl: window width must be >= 1");
    if (config.n_sensors < 1) throw ConfigError("gcrl: n_sensors must be >= 1");
}

Matrix propagation_matrix(std::span<const int> adjacency, std::size_t n) {
    if (adjacency.size() != n * n) throw ShapeError("propagation_matrix: adjacency is not n x n");
    Matrix a_hat(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a_hat(i, j) = i == j ? 1.0 : (adjacency[i * n + j] != 0 ? 1.0 : 0.0);
    std::vector<double> inv_sqrt_degree(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) d += a_hat(i, j);
        inv_sqrt_degree[i] = 1.0 / std::sqrt(d);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a_hat(i, j) *= inv_sqrt_degree[i] * inv_sqrt_degree[j];
    return a_hat;
}

namespace {

Matrix glorot(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix m(rows, cols);
    for (auto& v : m.data()) v = dist(rng);
    return m;
}

std::string layer_name(std::size_t l, const char* what) {
    std::ostringstream os;
    os << "layer" << l << "." << what;
    return os.str();
}

}  // namespace

GcrlParams GcrlParams::initialize(const GcrlConfig& config, Matrix propagation, std::uint64_t seed) {
    validate(config);
    if (propagation.rows() != config.n_sensors || propagation.cols() != config.n_sensors)
        throw ShapeError("gcrl: propagation matrix " + propagation.shape() + " does not match n_sensors");
    GcrlParams p;
    p.config = config;
    p.propagation = std::move(propagation);
    p.feature_mean.assign(config.n_sensors, 0.0);
    p.feature_std.assign(config.n_sensors, 1.0);

    std::mt19937_64 rng(seed);
    const std::size_t h = config.hidden;
    for (std::size_t l = 0; l < config.layers; ++l) {
        const std::size_t in = l == 0 ? config.window : h;
        p.weights.push_back({layer_name(l, "gcn"), glorot(in, h, in, h, rng)});
        p.weights.push_back({layer_name(l, "lstm_wx"), glorot(1, 4 * h, 1, 4 * h, rng)});
        p.weights.push_back({layer_name(l, "lstm_wh"), glorot(h, 4 * h, h, 4 * h, rng)});
        p.weights.push_back({layer_name(l, "lstm_b"), Matrix(1, 4 * h)});
        p.weights.push_back({layer_name(l, "lstm_wout"), glorot(h, 1, h, 1, rng)});
        p.weights.push_back({layer_name(l, "lstm_bout"), Matrix(1, 1)});
    }
    p.weights.push_back({"readout_w", glorot(h, config.n_classes, h, config.n_classes, rng)});
    p.weights.push_back({"readout_b", Matrix(1, config.n_classes)});
    return p;
}

namespace {

// Each row of `input` is one node's length-H sequence of scalars; the hidden
// state is H wide and every step is projected back to a scalar.
Var lstm(Tape& tape, Var input, const std::vector<Var>& w, std::size_t l, std::size_t h) {
    const Var wx = w[l * GcrlParams::kPerLayer + GcrlParams::LstmWx];
    const Var wh = w[l * GcrlParams::kPerLayer + GcrlParams::LstmWh];
    const Var b = w[l * GcrlParams::kPerLayer + GcrlParams::LstmB];
    const Var wout = w[l * GcrlParams::kPerLayer + GcrlParams::LstmWout];
    const Var bout = w[l * GcrlParams::kPerLayer + GcrlParams::LstmBout];

    const std::size_t rows = tape.value(input).rows();
    Var hidden = tape.constant(Matrix(rows, h));
    Var cell = tape.constant(Matrix(rows, h));
    std::vector<Var> steps;
    steps.reserve(h);
    for (std::size_t t = 0; t < h; ++t) {
        const Var x = tape.columns(input, t, 1);
        const Var z = tape.add_row(tape.add(tape.matmul(x, wx), tape.matmul(hidden, wh)), b);
        const Var in_gate = tape.sigmoid(tape.columns(z, 0, h));
        const Var forget_gate = tape.sigmoid(tape.columns(z, h, h));
        const Var candidate = tape.tanh(tape.columns(z, 2 * h, h));
        const Var out_gate = tape.sigmoid(tape.columns(z, 3 * h, h));
        cell = tape.add(tape.hadamard(forget_gate, cell), tape.hadamard(in_gate, candidate));
        hidden = tape.hadamard(out_gate, tape.tanh(cell));
        steps.push_back(tape.add_row(tape.matmul(hidden, wout), bout));
    }
    return tape.concat_columns(steps);
}

ForwardTrace forward_impl(Tape& tape, const GcrlParams& params, const Matrix& features, bool trainable) {
    const auto& cfg = params.config;
    if (features.cols() != cfg.window || features.rows() == 0 || features.rows() % cfg.n_sensors != 0) {
        std::ostringstream os;
        os << "gcrl forward: features " << features.shape() << " do not stack N x T = " << cfg.n_sensors << "x"
           << cfg.window << " samples";
        throw ShapeError(os.str());
    }
    ForwardTrace trace;
    for (const auto& w : params.weights)
        trace.params.push_back(trainable ? tape.parameter(w.value) : tape.constant(w.value));

    Var x = tape.constant(features);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const Var gcn_w = trace.params[l * GcrlParams::kPerLayer + GcrlParams::Gcn];
        const Var g = tape.relu(tape.matmul(tape.propagate(params.propagation, x), gcn_w));
        const Var lo = lstm(tape, g, trace.params, l, cfg.hidden);
        x = tape.add(lo, g);
        trace.gcn.push_back(g);
        trace.lstm.push_back(lo);
        trace.layer_out.push_back(x);
    }
    const Var pooled = tape.mean_pool_rows(x, cfg.n_sensors);
    const std::size_t r = cfg.layers * GcrlParams::kPerLayer;
    trace.logits = tape.add_row(tape.matmul(pooled, trace.params[r]), trace.params[r + 1]);
    return trace;
}

}  // namespace

ForwardTrace forward(Tape& tape, const GcrlParams& params, const Matrix& features) {
    return forward_impl(tape, params, features, true);
}

Matrix forward_logits(const Matrix& features, const GcrlParams& params) {
    if (features.rows() != params.config.n_sensors)
        throw ShapeError("forward_logits: expected one N x T sample, got " + features.shape());
    Tape tape;
    const auto trace = forward_impl(tape, params, features, false);
    return tape.value(trace.logits);
}

Matrix standardize(const Matrix& raw, const GcrlParams& params) {
    const auto& cfg = params.config;
    if (raw.rows() != cfg.n_sensors || raw.cols() != cfg.window) {
        std::ostringstream os;
        os << "standardize: window " << raw.shape() << " does not match " << cfg.n_sensors << "x" << cfg.window;
        throw ShapeError(os.str());
    }
    Matrix out = raw;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j)
            out(i, j) = (out(i, j) - params.feature_mean[i]) / params.feature_std[i];
    return out;
}

Matrix stack_rows(std::span<const Matrix> samples) {
    if (samples.empty()) return {};
    const std::size_t r = samples.front().rows();
    const std::size_t c = samples.front().cols();
    std::vector<double> data;
    data.reserve(samples.size() * r * c);
    for (const auto& s : samples) {
        if (s.rows() != r || s.cols() != c) throw ShapeError("stack_rows: samples differ in shape");
        data.insert(data.end(), s.data().begin(), s.data().end());
    }
    return Matrix(samples.size() * r, c, std::move(data));
}

LossAndGradients loss_and_gradients(const GcrlParams& params, std::span<const Matrix> features,
                                    std::span<const int> labels) {
    Tape tape;
    const auto trace = forward(tape, params, stack_rows(features));
    const Var loss = tape.softmax_cross_entropy(trace.logits, labels);
    tape.backward(loss);
    LossAndGradients out;
    out.loss = tape.value(loss)(0, 0);
    for (auto v : trace.params) out.gradients.push_back(tape.grad(v));
    return out;
}

namespace {

double evaluate_loss(const GcrlParams& params, const std::vector<Matrix>& features, const std::vector<int>& labels,
                     std::span<const std::size_t> index, std::size_t batch_size) {
    double total = 0.0;
    std::vector<Matrix> batch;
    std::vector<int> batch_labels;
    for (std::size_t start = 0; start < index.size(); start += batch_size) {
        batch.clear();
        batch_labels.clear();
        for (std::size_t k = start; k < std::min(index.size(), start + batch_size); ++k) {
            batch.push_back(features[index[k]]);
            batch_labels.push_back(labels[index[k]]);
        }
        Tape tape;
        const auto trace = forward_impl(tape, params, stack_rows(batch), false);
        const Var loss = tape.softmax_cross_entropy(trace.logits, batch_labels);
        total += tape.value(loss)(0, 0) * static_cast<double>(batch.size());
    }
    return total / static_cast<double>(index.size());
}

// Every batch builds and drops a whole tape; without this glibc hands the
// memory back to the kernel each time.
void keep_heap() {
#ifdef __GLIBC__
    static const bool once = [] {
        mallopt(M_TRIM_THRESHOLD, 256 << 20);
        mallopt(M_MMAP_THRESHOLD, 32 << 20);
        return true;
    }();
    (void)once;
#endif
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t salt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(salt)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace

GcrlParams train(std::span<const Sample> data, const GcrlConfig& config, const Matrix& propagation,
                 const TrainOptions& options, TrainReport* report) {
    validate(config);
    if (data.empty()) throw ConfigError("gcrl train: empty training set");
    if (options.batch_size < 1) throw ConfigError("gcrl train: batch_size must be >= 1");
    if (!(options.validation_fraction >= 0.0 && options.validation_fraction < 1.0))
        throw ConfigError("gcrl train: validation_fraction must lie in [0, 1)");
    for (const auto& s : data) {
        if (s.features.rows() != config.n_sensors || s.features.cols() != config.window)
            throw ShapeError("gcrl train: sample " + s.features.shape() + " does not match the configured N x T");
        if (s.label < 0 || static_cast<std::size_t>(s.label) >= config.n_classes)
            throw ConfigError("gcrl train: label out of range for n_classes");
    }

    keep_heap();
    GcrlParams params = GcrlParams::initialize(config, propagation, sub_seed(options.seed, 1));

    // per-sensor standardization over every training value
    const std::size_t n = config.n_sensors;
    std::vector<double> sum(n, 0.0), sq(n, 0.0);
    for (const auto& s : data)
        for (std::size_t i = 0; i < n; ++i)
            for (double v : s.features.row(i)) sum[i] += v;
    const double count = static_cast<double>(data.size() * config.window);
    for (std::size_t i = 0; i < n; ++i) params.feature_mean[i] = sum[i] / count;
    for (const auto& s : data)
        for (std::size_t i = 0; i < n; ++i)
            for (double v : s.features.row(i)) sq[i] += (v - params.feature_mean[i]) * (v - params.feature_mean[i]);
    for (std::size_t i = 0; i < n; ++i) {
        const double sd = std::sqrt(sq[i] / count);
        params.feature_std[i] = sd > 1e-12 ? sd : 1.0;
    }

    std::vector<Matrix> features;
    std::vector<int> labels;
    features.reserve(data.size());
    for (const auto& s : data) {
        features.push_back(standardize(s.features, params));
        labels.push_back(s.label);
    }

    std::mt19937_64 rng(sub_seed(options.seed, 2));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    auto n_val = static_cast<std::size_t>(std::llround(options.validation_fraction * static_cast<double>(data.size())));
    if (n_val >= data.size()) n_val = data.size() - 1;
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> trn(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    const std::vector<std::size_t>& monitor = val.empty() ? trn : val;

    TrainReport local;
    TrainReport& rep = report ? *report : local;
    rep = TrainReport{};
    rep.train_size = trn.size();
    rep.validation_size = val.size();
    rep.initial_loss = evaluate_loss(params, features, labels, trn, 256);

    auto state = numerics::AdamState::for_params(params.weights, options.adam);
    GcrlParams best = params;
    double best_loss = std::numeric_limits<double>::infinity();
    double plateau_loss = best_loss;
    std::size_t last_improvement = 0;
    std::vector<Matrix> batch;
    std::vector<int> batch_labels;

    for (std::size_t epoch = 1; epoch <= options.max_epochs; ++epoch) {
        std::shuffle(trn.begin(), trn.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < trn.size(); start += options.batch_size) {
            batch.clear();
            batch_labels.clear();
            for (std::size_t k = start; k < std::min(trn.size(), start + options.batch_size); ++k) {
                batch.push_back(features[trn[k]]);
                batch_labels.push_back(labels[trn[k]]);
            }
            auto lg = loss_and_gradients(params, batch, batch_labels);
            if (!std::isfinite(lg.loss)) {
                std::ostringstream os;
                os << "gcrl train: loss diverged to " << lg.loss << " at epoch " << epoch << ", batch starting at "
                   << start << " (learning rate " << options.adam.learning_rate << ", previous epoch loss "
                   << (rep.train_loss.empty() ? rep.initial_loss : rep.train_loss.back()) << ")";
                throw NumericError(os.str());
            }
            epoch_loss += lg.loss * static_cast<double>(batch.size());
            numerics::adam_step(params.weights, lg.gradients, state);
        }
        rep.train_loss.push_back(options.track_train_loss ? evaluate_loss(params, features, labels, trn, 256)
                                                          : epoch_loss / static_cast<double>(trn.size()));
        const double vloss = evaluate_loss(params, features, labels, monitor, 256);
        if (!std::isfinite(vloss)) throw NumericError("gcrl train: validation loss is not finite");
        rep.validation_loss.push_back(vloss);
        rep.epochs_run = epoch;
        if (vloss < best_loss) {
            best_loss = vloss;
            best = params;
            rep.best_epoch = epoch;
        }
        if (vloss < plateau_loss - options.min_improvement) {
            plateau_loss = vloss;
            last_improvement = epoch;
        } else if (epoch - last_improvement >= options.patience) {
            break;
        }
    }
    return best;
}

Prediction predict_from_logits(std::span<const double> logits) {
    Prediction p;
    std::size_t arg = 0;
    for (std::size_t c = 1; c < logits.size(); ++c)
        if (logits[c] > logits[arg]) arg = c;
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - logits[arg]);
    p.label = static_cast<int>(arg);
    p.confidence = 1.0 / sum;
    return p;
}

Prediction classify(const Matrix& raw, const GcrlParams& params) {
    const auto logits = forward_logits(standardize(raw, params), params);
    return predict_from_logits(logits.data());
}

std::vector<Prediction> classify_batch(std::span<const Matrix> raw, const GcrlParams& params,
                                       std::size_t batch_size) {
    std::vector<Prediction> out;
    out.reserve(raw.size());
    std::vector<Matrix> batch;
    for (std::size_t start = 0; start < raw.size(); start += std::max<std::size_t>(batch_size, 1)) {
        batch.clear();
        for (std::size_t k = start; k < std::min(raw.size(), start + std::max<std::size_t>(batch_size, 1)); ++k)
            batch.push_back(standardize(raw[k], params));
        Tape tape;
        const auto trace = forward_impl(tape, params, stack_rows(batch), false);
        const auto& logits = tape.value(trace.logits);
        for (std::size_t r = 0; r < logits.rows(); ++r) out.push_back(predict_from_logits(logits.row(r)));
    }
    return out;
}

nlohmann::json to_json(const GcrlConfig& config) {
    return {{"layers", config.layers},
            {"hidden", config.hidden},
            {"n_classes", config.n_classes},
            {"window", config.window},
            {"n_sensors", config.n_sensors}};
}

void save(const std::filesystem::path& stem, const GcrlParams& params, const nlohmann::json& meta) {
    numerics::Checkpoint cp;
    cp.tensors = params.weights;
    cp.tensors.push_back({"propagation", params.propagation});
    cp.tensors.push_back({"feature_mean", Matrix(1, params.feature_mean.size(), params.feature_mean)});
    cp.tensors.push_back({"feature_std", Matrix(1, params.feature_std.size(), params.feature_std)});
    cp.meta = {{"config", to_json(params.config)}, {"extra", meta.is_null() ? nlohmann::json::object() : meta}};
    numerics::save_checkpoint(stem, cp);
}

GcrlParams load(const std::filesystem::path& stem) {
    auto cp = numerics::load_checkpoint(stem);
    GcrlParams p;
    try {
        const auto& c = cp.meta.at("config");
        p.config.layers = c.at("layers").get<std::size_t>();
        p.config.hidden = c.at("hidden").get<std::size_t>();
        p.config.n_classes = c.at("n_classes").get<std::size_t>();
        p.config.window = c.at("window").get<std::size_t>();
        p.config.n_sensors = c.at("n_sensors").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("gcrl checkpoint config: ") + e.what());
    }
    validate(p.config);
    const std::size_t n_weights = p.config.layers * GcrlParams::kPerLayer + 2;
    if (cp.tensors.size() != n_weights + 3) throw ConfigError("gcrl checkpoint: unexpected tensor count");
    p.weights.assign(cp.tensors.begin(), cp.tensors.begin() + static_cast<std::ptrdiff_t>(n_weights));
    p.propagation = cp.tensors[n_weights].value;
    const auto mean = cp.tensors[n_weights + 1].value.data();
    const auto sd = cp.tensors[n_weights + 2].value.data();
    p.feature_mean.assign(mean.begin(), mean.end());
    p.feature_std.assign(sd.begin(), sd.end());
    const auto reference = GcrlParams::initialize(p.config, p.propagation, 0);
    for (std::size_t k = 0; k < n_weights; ++k)
        if (!p.weights[k].value.same_shape(reference.weights[k].value) || p.weights[k].name != reference.weights[k].name)
            throw ShapeError("gcrl checkpoint: tensor '" + p.weights[k].name + "' has an unexpected shape or name");
    return p;
}

}  // namespace cloudedge::gcrl
