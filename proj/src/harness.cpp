#include "cloudedge/harness.hpp"

#include <chrono>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "cloudedge/checkpoint.hpp"
#include "cloudedge/error.hpp"

namespace cloudedge::harness {

std::optional<UploadMessage> UploadChannel::pop() {
    if (queue_.empty()) return std::nullopt;
    auto m = std::move(queue_.front());
    queue_.pop_front();
    return m;
}

CloudClassifier gcrl_classifier(const gcrl::GcrlParams& params) {
    return [&params](const Matrix& raw) { return gcrl::classify(raw, params); };
}

std::size_t EdgePass::s_total(std::size_t window) const {
    std::size_t s = 0;
    for (const auto& v : verdicts.at(window)) s += v.s;
    return s;
}

void validate_models(std::span<const edge::EdgeModel> models, std::size_t n_sensors) {
    if (models.empty()) throw ConfigError("no edge models");
    std::vector<int> seen(n_sensors, 0);
    const auto& agg = models.front().aggregation;
    for (const auto& m : models) {
        if (m.aggregation.scale != agg.scale || m.aggregation.stride != agg.stride)
            throw ConfigError("edge models disagree on the aggregation config");
        if (m.boxcox.size() != m.sensors.size()) throw ConfigError("edge model lacks Box-Cox parameters");
        for (const auto& g : m.sensors) {
            if (g.sensor >= n_sensors) throw ConfigError("edge model references sensor index out of range");
            ++seen[g.sensor];
        }
    }
    for (std::size_t i = 0; i < n_sensors; ++i)
        if (seen[i] != 1) {
            std::ostringstream os;
            os << "sensor " << i << " is covered by " << seen[i] << " edge models, expected 1";
            throw ConfigError(os.str());
        }
}

EdgePass run_edges(std::span<const dataset::SensorFrame> stream, std::span<const edge::EdgeModel> models,
                   std::size_t n_sensors) {
    validate_models(models, n_sensors);
    const auto& agg = models.front().aggregation;
    for (const auto& f : stream)
        if (f.values.size() != n_sensors) throw ConfigError("stream frame width does not match the sensor count");
    EdgePass pass;
    pass.n_frames = stream.size();
    pass.n_sensors = n_sensors;
    pass.scale = agg.scale;
    pass.stride = agg.stride;
    pass.starts = preprocess::window_starts(stream.size(), agg);
    pass.verdicts.reserve(pass.starts.size());

    using clock = std::chrono::steady_clock;
    clock::duration elapsed{};
    for (auto s : pass.starts) {
        const auto window = stream.subspan(s, agg.window_length());
        const auto t0 = clock::now();
        std::vector<edge::EdgeVerdict> verdicts;
        verdicts.reserve(models.size());
        for (const auto& m : models) verdicts.push_back(edge::detect_edge(window, m));
        elapsed += clock::now() - t0;
        pass.verdicts.push_back(std::move(verdicts));
        pass.truth.push_back(preprocess::window_class(window));
    }
    if (!pass.starts.empty())
        pass.mean_time_ms = std::chrono::duration<double, std::milli>(elapsed).count() /
                            static_cast<double>(pass.starts.size());
    return pass;
}

namespace {

int cloud_truth(int truth, std::size_t n_classes) {
    return n_classes == 2 ? (truth != dataset::kNormalClass ? 1 : 0) : truth;
}

void tally(Tallies& t, bool predicted_abnormal, bool actually_abnormal) {
    if (predicted_abnormal)
        (actually_abnormal ? t.tp : t.fp)++;
    else
        (actually_abnormal ? t.fn : t.tn)++;
}

}  // namespace

RunMetrics replay(const EventLogHeader& header, std::span<const WindowEvent> events) {
    Tallies edge_t, final_t;
    std::vector<int> predicted, truth;
    for (const auto& ev : events) {
        const bool abnormal = ev.truth != dataset::kNormalClass;
        tally(edge_t, ev.uploaded, abnormal);
        const int pred = ev.uploaded && ev.prediction ? *ev.prediction : dataset::kNormalClass;
        tally(final_t, pred != dataset::kNormalClass, abnormal);
        predicted.push_back(pred);
        truth.push_back(cloud_truth(ev.truth, header.n_classes));
    }
    RunMetrics m;
    m.edge = compute_metrics(edge_t, header.n_frames, header.n_sensors, header.scale);
    m.final = compute_metrics(final_t, header.n_frames, header.n_sensors, header.scale);
    m.per_class_acc = per_class_accuracy(predicted, truth, header.n_classes);
    m.windows = events.size();
    m.n_frames = header.n_frames;
    m.n_sensors = header.n_sensors;
    m.scale = header.scale;
    m.e = header.e;
    return m;
}

PipelineResult evaluate_pass(const EdgePass& pass, std::span<const edge::EdgeModel> models, long e,
                             const CloudClassifier& cloud, std::size_t n_classes) {
    if (n_classes < 2) throw ConfigError("n_classes must be >= 2");
    PipelineResult result;
    auto& h = result.header;
    h.n_frames = pass.n_frames;
    h.n_sensors = pass.n_sensors;
    h.scale = pass.scale;
    h.stride = pass.stride;
    h.e = e;
    h.n_classes = n_classes;
    for (const auto& m : models) h.edges.push_back(m.edge);

    const auto window_length = static_cast<std::int64_t>(pass.scale + 1);
    const auto period = models.empty() ? std::int64_t{1} : models.front().aggregation.sampling_period;
    UploadChannel channel;
    for (std::size_t w = 0; w < pass.starts.size(); ++w) {
        const auto& verdicts = pass.verdicts[w];
        const auto vote = edge::network_vote(verdicts, e);
        WindowEvent ev;
        ev.index = w;
        ev.t = vote.t;
        for (const auto& v : verdicts) ev.s.push_back(v.s);
        ev.s_total = vote.s_total;
        ev.uploaded = vote.upload;
        ev.truth = pass.truth[w];
        result.events.push_back(std::move(ev));
        if (vote.upload) {
            UploadMessage msg;
            msg.window_index = w;
            msg.t = vote.t;
            for (const auto& v : verdicts) msg.edges.push_back(v.edge);
            msg.s_total = vote.s_total;
            msg.emit_time = vote.t + window_length * period;
            msg.n_sensors = vote.n_sensors;
            msg.window = vote.window;
            msg.payload = vote.payload;
            channel.push(std::move(msg));
        }
        // cloud consumer drains in FIFO order
        while (auto msg = channel.pop()) {
            const auto pred = cloud(msg->features());
            if (pred.label < 0 || static_cast<std::size_t>(pred.label) >= n_classes)
                throw NumericError("cloud classifier returned a class id outside [0, n_classes)");
            auto& target = result.events[msg->window_index];
            target.prediction = pred.label;
            target.confidence = pred.confidence;
            result.uploads.push_back(std::move(*msg));
        }
    }
    result.metrics = replay(result.header, result.events);
    result.metrics.mean_time_ms = pass.mean_time_ms;
    return result;
}

PipelineResult run_pipeline(std::span<const dataset::SensorFrame> stream, std::span<const edge::EdgeModel> models,
                            std::size_t n_sensors, long e, const CloudClassifier& cloud, std::size_t n_classes) {
    const auto pass = run_edges(stream, models, n_sensors);
    return evaluate_pass(pass, models, e, cloud, n_classes);
}

PipelineResult run_pipeline(const dataset::DatasetSplit& split, std::span<const edge::EdgeModel> models,
                            const gcrl::GcrlParams& cloud, long e) {
    validate_models(models, split.n_sensors());
    const auto& agg = models.front().aggregation;
    if (cloud.config.n_sensors != split.n_sensors() || cloud.config.window != agg.window_length())
        throw ConfigError("cloud model shape does not match the sensor network and aggregation window");
    return run_pipeline(split.test, models, split.n_sensors(), e, gcrl_classifier(cloud), cloud.config.n_classes);
}

long select_sensitivity(const EdgePass& pass) {
    std::optional<std::size_t> lowest;
    for (std::size_t w = 0; w < pass.truth.size(); ++w)
        if (pass.truth[w] != dataset::kNormalClass) {
            const auto s = pass.s_total(w);
            if (!lowest || s < *lowest) lowest = s;
        }
    if (!lowest) throw ConfigError("select_sensitivity: no abnormal windows to calibrate on");
    return static_cast<long>(*lowest) - 1;
}

std::vector<gcrl::Sample> training_samples(std::span<const dataset::SensorFrame> train,
                                           const preprocess::AggregationConfig& aggregation, std::size_t n_sensors,
                                           std::size_t n_classes, std::size_t resample_factor) {
    if (resample_factor < 1) throw ConfigError("resample factor must be >= 1");
    std::vector<gcrl::Sample> out;
    const std::size_t len = aggregation.window_length();
    for (auto s : preprocess::window_starts(train.size(), aggregation)) {
        const auto window = train.subspan(s, len);
        gcrl::Sample sample;
        sample.features = Matrix(n_sensors, len);
        for (std::size_t k = 0; k < len; ++k)
            for (std::size_t i = 0; i < n_sensors; ++i) sample.features(i, k) = window[k].values.at(i);
        const int cls = preprocess::window_class(window);
        sample.label = cloud_truth(cls, n_classes);
        if (static_cast<std::size_t>(sample.label) >= n_classes)
            throw ConfigError("training window class exceeds the configured n_classes");
        const std::size_t copies = cls != dataset::kNormalClass ? resample_factor : 1;
        for (std::size_t c = 0; c < copies; ++c) out.push_back(sample);
    }
    return out;
}

std::vector<SweepRow> sweep(const dataset::DatasetSplit& split, std::span<const edge::EdgeModel> models,
                            std::span<const long> e_values, std::span<const double> p_values,
                            const graph::GraphOptions& base_options, const ClassifierFactory& factory,
                            std::size_t n_classes) {
    const auto pass = run_edges(split.test, models, split.n_sensors());
    std::vector<SweepRow> rows;
    for (double p : p_values) {
        auto options = base_options;
        options.threshold = p;
        const auto g = graph::build_graph(split.train, split.sensor_names, options);
        const auto classifier = factory(g);
        // windows are classified at most once per graph
        std::map<std::vector<double>, gcrl::Prediction> cache;
        CloudClassifier cached = [&](const Matrix& raw) {
            std::vector<double> key(raw.data().begin(), raw.data().end());
            if (auto it = cache.find(key); it != cache.end()) return it->second;
            const auto pred = classifier(raw);
            cache.emplace(std::move(key), pred);
            return pred;
        };
        for (long e : e_values) {
            auto result = evaluate_pass(pass, models, e, cached, n_classes);
            SweepRow row;
            row.p_threshold = p;
            row.e = e;
            row.graph_edges = g.edge_count();
            row.metrics = std::move(result.metrics);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

namespace {

nlohmann::json header_json(const EventLogHeader& h) {
    return {{"record", "header"}, {"n_frames", h.n_frames}, {"n_sensors", h.n_sensors}, {"B", h.scale},
            {"stride", h.stride},  {"e", h.e},               {"n_classes", h.n_classes}, {"edges", h.edges}};
}

}  // namespace

void write_event_log(std::ostream& out, const EventLogHeader& header, std::span<const WindowEvent> events) {
    out << header_json(header).dump() << '\n';
    for (const auto& ev : events) {
        nlohmann::json j = {{"record", "window"},
                            {"index", ev.index},
                            {"t", ev.t},
                            {"s", ev.s},
                            {"s_total", ev.s_total},
                            {"uploaded", ev.uploaded},
                            {"prediction", ev.prediction ? nlohmann::json(*ev.prediction) : nlohmann::json(nullptr)},
                            {"confidence", ev.confidence ? nlohmann::json(*ev.confidence) : nlohmann::json(nullptr)},
                            {"truth", ev.truth}};
        out << j.dump() << '\n';
    }
}

std::pair<EventLogHeader, std::vector<WindowEvent>> read_event_log(std::istream& in) {
    std::pair<EventLogHeader, std::vector<WindowEvent>> out;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    try {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            const auto kind = j.at("record").get<std::string>();
            if (kind == "header") {
                auto& h = out.first;
                h.n_frames = j.at("n_frames").get<std::size_t>();
                h.n_sensors = j.at("n_sensors").get<std::size_t>();
                h.scale = j.at("B").get<std::size_t>();
                h.stride = j.at("stride").get<std::size_t>();
                h.e = j.at("e").get<long>();
                h.n_classes = j.at("n_classes").get<std::size_t>();
                h.edges = j.at("edges").get<std::vector<int>>();
                have_header = true;
            } else if (kind == "window") {
                WindowEvent ev;
                ev.index = j.at("index").get<std::size_t>();
                ev.t = j.at("t").get<std::int64_t>();
                ev.s = j.at("s").get<std::vector<std::size_t>>();
                ev.s_total = j.at("s_total").get<std::size_t>();
                ev.uploaded = j.at("uploaded").get<bool>();
                if (!j.at("prediction").is_null()) ev.prediction = j.at("prediction").get<int>();
                if (!j.at("confidence").is_null()) ev.confidence = j.at("confidence").get<double>();
                ev.truth = j.at("truth").get<int>();
                out.second.push_back(std::move(ev));
            } else {
                throw ConfigError("unknown record type '" + kind + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        std::ostringstream os;
        os << "event log line " << line_no << ": " << e.what();
        throw ConfigError(os.str());
    }
    if (!have_header) throw ConfigError("event log has no header record");
    return out;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

bool get_u32(std::istream& in, std::uint32_t& v) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
    v = static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
        static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
    return true;
}

}  // namespace

void write_uploads(std::ostream& out, std::span<const UploadMessage> uploads) {
    for (const auto& m : uploads) {
        const auto header = nlohmann::json{{"window_index", m.window_index}, {"t", m.t},
                                           {"edges", m.edges},               {"s_total", m.s_total},
                                           {"emit_time", m.emit_time},       {"n_sensors", m.n_sensors},
                                           {"window", m.window}}
                                .dump();
        std::vector<unsigned char> payload;
        numerics::append_le_f64(payload, m.payload);
        put_u32(out, static_cast<std::uint32_t>(header.size()));
        out.write(header.data(), static_cast<std::streamsize>(header.size()));
        put_u32(out, static_cast<std::uint32_t>(payload.size()));
        out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    }
}

std::vector<UploadMessage> read_uploads(std::istream& in) {
    std::vector<UploadMessage> out;
    std::uint32_t len = 0;
    while (get_u32(in, len)) {
        std::string header(len, '\0');
        std::uint32_t payload_len = 0;
        if (!in.read(header.data(), len) || !get_u32(in, payload_len))
            throw ConfigError("upload file: truncated record header");
        std::vector<unsigned char> payload(payload_len);
        if (!in.read(reinterpret_cast<char*>(payload.data()), payload_len))
            throw ConfigError("upload file: truncated payload");
        UploadMessage m;
        try {
            const auto j = nlohmann::json::parse(header);
            m.window_index = j.at("window_index").get<std::size_t>();
            m.t = j.at("t").get<std::int64_t>();
            m.edges = j.at("edges").get<std::vector<int>>();
            m.s_total = j.at("s_total").get<std::size_t>();
            m.emit_time = j.at("emit_time").get<std::int64_t>();
            m.n_sensors = j.at("n_sensors").get<std::size_t>();
            m.window = j.at("window").get<std::size_t>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("upload file: ") + e.what());
        }
        m.payload = numerics::read_le_f64(payload);
        if (m.payload.size() != m.n_sensors * m.window) throw ConfigError("upload file: payload size mismatch");
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace cloudedge::harness
