// cloudedge: command-line driver for the cloud-edge anomaly detection pipeline.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cloudedge/config.hpp"
#include "cloudedge/error.hpp"
#include "cloudedge/experiment.hpp"
#include "cloudedge/table_check.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cloudedge;

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kRuntimeError = 3 };

/// Flags shared by every data-driven subcommand. Each one overrides the
/// matching config-file value when given.
struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::optional<std::string> csv, train_csv, test_csv, edge_map, label_scheme;
    std::optional<double> train_fraction;
    std::optional<std::size_t> scale, stride;
    std::optional<double> p_threshold, alpha;
    bool absolute = false;
    std::optional<std::size_t> layers, hidden, n_classes, max_epochs, patience, batch_size, resample_factor;
    std::optional<double> learning_rate, min_improvement;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("-c,--config", f.config, "JSON run config (defaults: built-in synthetic scenario)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "run seed; module seeds derive from it");
    cmd->add_option("-o,--output-dir", f.output_dir, "directory for every artifact");
    cmd->add_option("--csv", f.csv, "single labelled CSV, split by --train-fraction");
    cmd->add_option("--train-fraction", f.train_fraction, "leading fraction of --csv rows used for training");
    cmd->add_option("--train-csv", f.train_csv, "training CSV (with --test-csv)");
    cmd->add_option("--test-csv", f.test_csv, "test CSV (with --train-csv)");
    cmd->add_option("--edge-map", f.edge_map, "edge map JSON: {\"edges\": {\"1\": [sensor, ...]}}");
    cmd->add_option("--label-scheme", f.label_scheme, "CSV label encoding")
        ->check(CLI::IsMember({"binary", "multiclass"}));
    cmd->add_option("-B,--scale", f.scale, "aggregation scale B; a window holds B+1 samples");
    cmd->add_option("--stride", f.stride, "samples between window starts (default B+1)");
    cmd->add_option("-p,--p-threshold", f.p_threshold, "correlation threshold for graph edges");
    cmd->add_option("--alpha", f.alpha, "significance level for graph edges");
    cmd->add_flag("--absolute", f.absolute, "compare |rho| with the threshold");
    cmd->add_option("--layers", f.layers, "GCRL layer count");
    cmd->add_option("--hidden", f.hidden, "GCRL hidden width");
    cmd->add_option("--n-classes", f.n_classes, "2 for binary, K+1 for K attack types");
    cmd->add_option("--max-epochs", f.max_epochs, "training epoch budget");
    cmd->add_option("--patience", f.patience, "early-stopping patience in epochs");
    cmd->add_option("--min-improvement", f.min_improvement, "validation-loss drop that resets patience");
    cmd->add_option("--batch-size", f.batch_size, "training batch size");
    cmd->add_option("--learning-rate", f.learning_rate, "Adam learning rate");
    cmd->add_option("--resample-factor", f.resample_factor, "copies of each abnormal training window");
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("'" + path.string() + "': " + e.what());
    }
}

template <class T>
void put(json& doc, const char* section, const char* key, const std::optional<T>& v) {
    if (v) doc[section][key] = *v;
}

RunConfig resolve_config(const CommonFlags& f, std::optional<long> e = std::nullopt) {
    json doc = f.config.empty() ? json{{"data", {{"synthetic", "default"}}}} : read_json(f.config);
    const fs::path base = f.config.empty() ? fs::path{} : fs::path(f.config).parent_path();
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    if (f.seed) doc["seed"] = *f.seed;
    if (f.output_dir) doc["output_dir"] = fs::absolute(*f.output_dir).string();
    if (f.csv || f.train_csv || f.test_csv) {
        auto& data = doc["data"];
        for (const char* k : {"synthetic", "csv", "train", "test"}) data.erase(k);
        if (f.csv) data["csv"] = fs::absolute(*f.csv).string();
        if (f.train_csv) data["train"] = fs::absolute(*f.train_csv).string();
        if (f.test_csv) data["test"] = fs::absolute(*f.test_csv).string();
    }
    if (f.edge_map) doc["data"]["edge_map"] = fs::absolute(*f.edge_map).string();
    put(doc, "data", "label_scheme", f.label_scheme);
    put(doc, "data", "train_fraction", f.train_fraction);
    put(doc, "aggregation", "B", f.scale);
    put(doc, "aggregation", "stride", f.stride);
    put(doc, "graph", "p_threshold", f.p_threshold);
    put(doc, "graph", "alpha", f.alpha);
    if (f.absolute) doc["graph"]["absolute"] = true;
    put(doc, "gcrl", "layers", f.layers);
    put(doc, "gcrl", "hidden", f.hidden);
    put(doc, "gcrl", "n_classes", f.n_classes);
    put(doc, "gcrl", "max_epochs", f.max_epochs);
    put(doc, "gcrl", "patience", f.patience);
    put(doc, "gcrl", "batch_size", f.batch_size);
    put(doc, "gcrl", "min_improvement", f.min_improvement);
    put(doc, "gcrl", "learning_rate", f.learning_rate);
    put(doc, "gcrl", "resample_factor", f.resample_factor);
    if (e) doc["e"] = *e;
    auto cfg = parse_run_config(doc, base);
    check_inputs(cfg);
    return cfg;
}

fs::path prepare_output(const RunConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    return cfg.output_dir;
}

void write_json(const fs::path& path, const json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
}

std::string fmt_opt(const std::optional<double>& v, int precision = 4) {
    if (!v) return "undef";
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << *v;
    return os.str();
}

void print_run(const harness::RunMetrics& m) {
    std::cout << "e=" << m.e << " windows=" << m.windows << " TP=" << m.edge.tallies.tp << " FP=" << m.edge.tallies.fp
              << " FN=" << m.edge.tallies.fn << " TN=" << m.edge.tallies.tn << " FNR=" << fmt_opt(m.edge.fnr)
              << " k_times=" << m.edge.k_times << " RTL=" << m.edge.rtl << '\n';
    std::cout << "  final: precision=" << fmt_opt(m.final.precision) << " recall=" << fmt_opt(m.final.recall)
              << " f1=" << fmt_opt(m.final.f1) << '\n';
}

// ---- subcommands -----------------------------------------------------------

int cmd_gen_data(const CommonFlags& f) {
    auto cfg = resolve_config(f);
    if (cfg.data.kind != DataKind::Synthetic) throw ConfigError("gen-data needs a synthetic data source");
    const auto dir = prepare_output(cfg);
    const auto split = load_data(cfg);
    dataset::write_csv(dir / "train.csv", split.sensor_names, split.train, cfg.data.load.scheme);
    dataset::write_csv(dir / "test.csv", split.sensor_names, split.test, cfg.data.load.scheme);
    write_json(dir / "edge_map.json", dataset::edge_map_to_json(split));
    write_json(dir / "synthetic_spec.json", dataset::to_json(cfg.data.synthetic));
    const auto tr = dataset::count_classes(split.train);
    const auto te = dataset::count_classes(split.test);
    std::cout << "sensors=" << split.n_sensors() << " edges=" << split.edge_ids().size() << " train=" << split.train.size()
              << " (abnormal " << tr.abnormal << ") test=" << split.test.size() << " (abnormal " << te.abnormal
              << ")\nwrote " << dir.string() << '\n';
    return kOk;
}

int cmd_fit_edge(const CommonFlags& f) {
    const auto cfg = resolve_config(f);
    const auto split = load_data(cfg);
    const auto models = fit_edges(cfg, split);
    const auto dir = prepare_output(cfg) / "edge_models";
    fs::create_directories(dir);
    for (const auto& m : models) {
        write_json(dir / ("edge_" + std::to_string(m.edge) + ".json"), edge::to_json(m));
        std::size_t borrowed = 0;
        for (const auto& g : m.sensors) borrowed += g.abnormal_borrowed;
        std::cout << "edge " << m.edge << ": sensors=" << m.sensors.size() << " prior_normal=" << m.priors.normal
                  << " prior_abnormal=" << m.priors.abnormal << " borrowed_abnormal=" << borrowed << '\n';
    }
    std::cout << "wrote " << models.size() << " edge models to " << dir.string() << '\n';
    return kOk;
}

int cmd_build_graph(const CommonFlags& f) {
    const auto cfg = resolve_config(f);
    const auto split = load_data(cfg);
    const auto g = build_graph(cfg, split);
    const auto dir = prepare_output(cfg);
    write_json(dir / "graph.json", graph::to_json(g));
    std::ofstream edges(dir / "edges.txt");
    graph::write_edge_list(edges, g);
    std::cout << "p=" << cfg.graph.threshold << " alpha=" << cfg.graph.alpha << " edges=" << g.edge_count()
              << " hash=" << g.hash() << '\n';
    return kOk;
}

int cmd_train(const CommonFlags& f, const std::string& graph_path) {
    const auto cfg = resolve_config(f);
    const auto split = load_data(cfg);
    const auto g = graph_path.empty() ? build_graph(cfg, split) : graph::graph_from_json(read_json(graph_path));
    if (g.names() != split.sensor_names) throw ConfigError("graph sensors do not match the dataset");
    gcrl::TrainReport report;
    const auto params = train_cloud(cfg, split, g, &report);
    const auto dir = prepare_output(cfg);
    const auto card = model_card(cfg, g, params, report);
    gcrl::save(dir / "gcrl", params, card);
    write_json(dir / "model_card.json", card);
    std::cout << "trained " << report.epochs_run << " epochs (best " << report.best_epoch << "), samples "
              << report.train_size << "+" << report.validation_size << ", initial loss " << report.initial_loss
              << ", best validation loss " << report.validation_loss.at(report.best_epoch - 1) << '\n';
    return kOk;
}

struct SimulateFlags {
    std::vector<std::string> e;
    std::string model;
    std::string edge_models;
};

std::vector<edge::EdgeModel> load_edge_models(const fs::path& dir) {
    std::vector<edge::EdgeModel> models;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) models.push_back(edge::edge_model_from_json(read_json(p)));
    std::sort(models.begin(), models.end(), [](const auto& a, const auto& b) { return a.edge < b.edge; });
    if (models.empty()) throw ConfigError("no edge models in '" + dir.string() + "'");
    return models;
}

void write_run(const fs::path& dir, const std::string& suffix, const harness::PipelineResult& r) {
    write_json(dir / ("metrics" + suffix + ".json"), harness::to_json(r.metrics));
    std::ofstream events(dir / ("events" + suffix + ".jsonl"), std::ios::binary);
    harness::write_event_log(events, r.header, r.events);
    std::ofstream uploads(dir / ("uploads" + suffix + ".bin"), std::ios::binary);
    harness::write_uploads(uploads, r.uploads);
}

int cmd_simulate(const CommonFlags& f, const SimulateFlags& s) {
    auto cfg = resolve_config(f);
    std::vector<long> e_values;
    bool auto_e = s.e.empty();
    for (const auto& v : s.e) {
        if (v == "auto") {
            auto_e = true;
            continue;
        }
        try {
            std::size_t used = 0;
            const long e = std::stol(v, &used);
            if (used != v.size() || e < 0) throw std::invalid_argument(v);
            e_values.push_back(e);
        } catch (const std::exception&) {
            throw ConfigError("--e expects nonnegative integers or 'auto', got '" + v + "'");
        }
    }
    const auto split = load_data(cfg);
    const auto models = s.edge_models.empty() ? fit_edges(cfg, split) : load_edge_models(s.edge_models);
    harness::validate_models(models, split.n_sensors());

    gcrl::GcrlParams params;
    std::optional<json> card;
    std::optional<graph::CorrelationGraph> g;
    if (s.model.empty()) {
        g = build_graph(cfg, split);
        gcrl::TrainReport report;
        params = train_cloud(cfg, split, *g, &report);
        card = model_card(cfg, *g, params, report);
    } else {
        params = gcrl::load(s.model);
    }
    if (auto_e && cfg.e) e_values.insert(e_values.begin(), *cfg.e);
    if (auto_e && !cfg.e) e_values.insert(e_values.begin(), resolve_sensitivity(cfg, split, models));

    const auto dir = prepare_output(cfg);
    if (card) {
        gcrl::save(dir / "gcrl", params, *card);
        write_json(dir / "model_card.json", *card);
    }
    const auto pass = harness::run_edges(split.test, models, split.n_sensors());
    const auto classifier = harness::gcrl_classifier(params);
    std::ofstream csv(dir / "metrics.csv", std::ios::binary);
    csv << harness::metrics_csv_header() << '\n';
    json timing = json::array();
    for (long e : e_values) {
        const auto r = harness::evaluate_pass(pass, models, e, classifier, params.config.n_classes);
        write_run(dir, e_values.size() == 1 ? "" : "_e" + std::to_string(e), r);
        csv << harness::metrics_csv_row(r.metrics) << '\n';
        timing.push_back({{"e", e}, {"mean_time_ms", pass.mean_time_ms}});
        print_run(r.metrics);
    }
    write_json(dir / "timing.json", timing);
    std::cout << "wrote " << dir.string() << '\n';
    return kOk;
}

int cmd_evaluate(const std::string& events_path, const std::string& metrics_path) {
    std::ifstream in(events_path, std::ios::binary);
    if (!in) throw ConfigError("event log not found: '" + events_path + "'");
    const auto [header, events] = harness::read_event_log(in);
    const auto m = harness::replay(header, events);
    const auto doc = harness::to_json(m);
    std::cout << doc.dump(2) << '\n';
    if (!metrics_path.empty()) {
        const auto expected = read_json(metrics_path);
        if (expected != doc) {
            std::cerr << "replayed metrics differ from " << metrics_path << '\n';
            return kRuntimeError;
        }
        std::cerr << "replayed metrics match " << metrics_path << '\n';
    }
    return kOk;
}

int cmd_sweep(const CommonFlags& f, std::vector<long> e_values, std::vector<double> p_values) {
    const auto cfg = resolve_config(f);
    const auto split = load_data(cfg);
    const auto models = fit_edges(cfg, split);
    if (e_values.empty())
        for (long e = 0; e <= static_cast<long>(split.n_sensors()); ++e) e_values.push_back(e);
    if (p_values.empty()) p_values = {0.45, 0.55, 0.65};
    std::vector<gcrl::GcrlParams> trained;
    trained.reserve(p_values.size());
    const harness::ClassifierFactory factory = [&](const graph::CorrelationGraph& g) {
        trained.push_back(train_cloud(cfg, split, g));
        std::cerr << "p=" << g.options().threshold << " edges=" << g.edge_count() << " trained\n";
        return harness::gcrl_classifier(trained.back());
    };
    auto n_classes = cfg.cloud.model.n_classes;
    const auto rows = harness::sweep(split, models, e_values, p_values, cfg.graph, factory, n_classes);
    const auto dir = prepare_output(cfg);
    std::ofstream csv(dir / "sweep.csv", std::ios::binary);
    csv << harness::metrics_csv_header() << ",graph_edges\n";
    for (const auto& r : rows) csv << harness::metrics_csv_row(r.metrics, r.p_threshold) << ',' << r.graph_edges << '\n';
    std::cout << harness::metrics_csv_header() << ",graph_edges\n";
    for (const auto& r : rows)
        std::cout << harness::metrics_csv_row(r.metrics, r.p_threshold) << ',' << r.graph_edges << '\n';
    return kOk;
}

int cmd_verify_tables(const std::string& json_path) {
    const auto rows = harness::check_detection_rows();
    const auto f1 = harness::check_classification_row();
    const auto setup = harness::published_setup();
    std::cout << "detection rows (N=" << setup.n_samples << ", sensors=" << setup.n_sensors << ", B=" << setup.scale
              << ")\n";
    std::cout << std::left << std::setw(4) << "e" << std::setw(10) << "k_times" << std::setw(12) << "RTL" << std::setw(12)
              << "RTL(calc)" << std::setw(9) << "FNR%" << std::setw(10) << "FNR%(calc)" << "  status\n";
    json doc = {{"detection", json::array()}};
    for (const auto& c : rows) {
        std::ostringstream fnr;
        fnr << std::fixed << std::setprecision(2) << c.fnr_percent;
        std::cout << std::left << std::setw(4) << c.row.e << std::setw(10) << c.k_times << std::setw(12) << c.row.rtl
                  << std::setw(12) << c.rtl << std::setw(9) << c.row.fnr_percent << std::setw(10) << fnr.str() << "  "
                  << (c.consistent() ? "PASS" : "FLAGGED") << '\n';
        doc["detection"].push_back(harness::to_json(c));
    }
    std::cout << "classification: precision=" << f1.precision << " recall=" << f1.recall << " f1=" << std::fixed
              << std::setprecision(4) << f1.f1 << " (published " << f1.published_f1 << ") "
              << (f1.ok ? "PASS" : "FLAGGED") << '\n';
    doc["classification"] = harness::to_json(f1);
    if (!json_path.empty()) write_json(json_path, doc);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cloud-edge hybrid anomaly detection for industrial sensor networks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "cloudedge 1.0.0");

    CommonFlags common;
    auto* gen = app.add_subcommand("gen-data", "write the synthetic scenario as train/test CSV plus an edge map");
    add_common(gen, common);
    auto* fit = app.add_subcommand("fit-edge", "fit Box-Cox and Gaussian naive Bayes models per edge");
    add_common(fit, common);
    auto* bg = app.add_subcommand("build-graph", "build the Spearman sensor correlation graph");
    add_common(bg, common);

    std::string graph_path;
    auto* tr = app.add_subcommand("train", "train the GCRL cloud classifier and write a checkpoint");
    add_common(tr, common);
    tr->add_option("--graph", graph_path, "graph.json from build-graph (default: build from the training split)")
        ->check(CLI::ExistingFile);

    SimulateFlags sim_flags;
    auto* sim = app.add_subcommand("simulate", "run the full edge-vote / upload / cloud pipeline on the test split");
    add_common(sim, common);
    sim->add_option("-e,--e", sim_flags.e, "sensitivity e; repeat for several runs; 'auto' tunes on training windows");
    sim->add_option("--model", sim_flags.model, "GCRL checkpoint stem from train (default: train now)");
    sim->add_option("--edge-models", sim_flags.edge_models, "directory of edge models from fit-edge")
        ->check(CLI::ExistingDirectory);

    std::string events_path, metrics_path;
    auto* ev = app.add_subcommand("evaluate", "recompute metrics from an event log");
    ev->add_option("--events", events_path, "events.jsonl from simulate")->required();
    ev->add_option("--metrics", metrics_path, "metrics.json to compare against; mismatch exits 3");

    std::vector<long> sweep_e;
    std::vector<double> sweep_p;
    auto* sw = app.add_subcommand("sweep", "grid of (p, e) runs; graph and GCRL rebuilt per p");
    add_common(sw, common);
    sw->add_option("--e-values", sweep_e, "sensitivity grid (default 0..N_sensors)")->delimiter(',');
    sw->add_option("--p-values", sweep_p, "threshold grid (default 0.45,0.55,0.65)")->delimiter(',');

    std::string tables_json;
    auto* vt = app.add_subcommand("verify-tables", "check the published detection and F1 table arithmetic");
    vt->add_option("--json", tables_json, "also write the report as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (*gen) return cmd_gen_data(common);
        if (*fit) return cmd_fit_edge(common);
        if (*bg) return cmd_build_graph(common);
        if (*tr) return cmd_train(common, graph_path);
        if (*sim) return cmd_simulate(common, sim_flags);
        if (*ev) return cmd_evaluate(events_path, metrics_path);
        if (*sw) return cmd_sweep(common, sweep_e, sweep_p);
        if (*vt) return cmd_verify_tables(tables_json);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}
