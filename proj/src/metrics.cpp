#include "cloudedge/metrics.hpp"

#include <sstream>

#include "cloudedge/error.hpp"

namespace cloudedge::harness {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::string csv(const std::optional<double>& v) {
    if (!v) return "";
    std::ostringstream os;
    os.precision(17);
    os << *v;
    return os.str();
}

nlohmann::json detection_json(const DetectionMetrics& m, bool traffic) {
    nlohmann::json j = {{"tp", m.tallies.tp},       {"fp", m.tallies.fp},      {"fn", m.tallies.fn},
                        {"tn", m.tallies.tn},       {"fnr", opt(m.fnr)},       {"precision", opt(m.precision)},
                        {"recall", opt(m.recall)},  {"f1", opt(m.f1)}};
    if (traffic) {
        j["k_times"] = m.k_times;
        j["rtl"] = m.rtl;
    }
    return j;
}

}  // namespace

std::optional<double> f1_score(std::optional<double> precision, std::optional<double> recall) {
    if (!precision || !recall || *precision + *recall == 0.0) return std::nullopt;
    return 2.0 * *precision * *recall / (*precision + *recall);
}

DetectionMetrics compute_metrics(const Tallies& tallies, std::size_t n_samples, std::size_t n_sensors,
                                 std::size_t scale) {
    DetectionMetrics m;
    m.tallies = tallies;
    m.fnr = ratio(tallies.fn, tallies.tp + tallies.fn);
    m.k_times = tallies.tp + tallies.fp;
    m.rtl = (static_cast<std::int64_t>(n_samples) - static_cast<std::int64_t>(m.k_times * scale)) *
            static_cast<std::int64_t>(n_sensors);
    m.precision = ratio(tallies.tp, tallies.tp + tallies.fp);
    m.recall = ratio(tallies.tp, tallies.tp + tallies.fn);
    m.f1 = f1_score(m.precision, m.recall);
    return m;
}

std::map<int, std::optional<double>> per_class_accuracy(std::span<const int> predictions, std::span<const int> truth,
                                                        std::size_t n_classes) {
    if (predictions.size() != truth.size()) throw ShapeError("per_class_accuracy: sequences differ in length");
    std::vector<std::size_t> total(n_classes, 0), correct(n_classes, 0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || static_cast<std::size_t>(truth[i]) >= n_classes)
            throw ConfigError("per_class_accuracy: class id out of range");
        const auto c = static_cast<std::size_t>(truth[i]);
        ++total[c];
        if (predictions[i] == truth[i]) ++correct[c];
    }
    std::map<int, std::optional<double>> out;
    for (std::size_t c = 0; c < n_classes; ++c) out[static_cast<int>(c)] = ratio(correct[c], total[c]);
    return out;
}

nlohmann::json to_json(const RunMetrics& m, bool include_timing) {
    nlohmann::json per_class = nlohmann::json::object();
    for (const auto& [c, acc] : m.per_class_acc) per_class[std::to_string(c)] = opt(acc);
    nlohmann::json j = {{"windows", m.windows},
                        {"n_frames", m.n_frames},
                        {"n_sensors", m.n_sensors},
                        {"B", m.scale},
                        {"e", m.e},
                        {"edge", detection_json(m.edge, true)},
                        {"final", detection_json(m.final, false)},
                        {"per_class_acc", std::move(per_class)}};
    if (include_timing) j["mean_time_ms"] = opt(m.mean_time_ms);
    return j;
}

std::string metrics_csv_header() {
    return "p,e,windows,edge_tp,edge_fp,edge_fn,edge_tn,fnr,k_times,rtl,tp,fp,fn,tn,precision,recall,f1";
}

std::string metrics_csv_row(const RunMetrics& m, std::optional<double> p_threshold) {
    std::ostringstream os;
    const auto& e = m.edge;
    const auto& f = m.final;
    os << csv(p_threshold) << ',' << m.e << ',' << m.windows << ',' << e.tallies.tp << ',' << e.tallies.fp << ','
       << e.tallies.fn << ',' << e.tallies.tn << ',' << csv(e.fnr) << ',' << e.k_times << ',' << e.rtl << ','
       << f.tallies.tp << ',' << f.tallies.fp << ',' << f.tallies.fn << ',' << f.tallies.tn << ',' << csv(f.precision)
       << ',' << csv(f.recall) << ',' << csv(f.f1);
    return os.str();
}

}  // namespace cloudedge::harness
