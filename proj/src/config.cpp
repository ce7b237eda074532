#include "cloudedge/config.hpp"

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "cloudedge/error.hpp"

namespace cloudedge {

namespace {

using nlohmann::json;

/// Reads typed members of one JSON object and rejects keys nobody asked for.
class Section {
public:
    Section(const json& doc, std::string where) : doc_(doc), where_(std::move(where)) {
        if (!doc_.is_object()) fail("must be an object");
    }

    template <class T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        if (!doc_.contains(key)) return;
        try {
            out = doc_.at(key).get<T>();
        } catch (const json::exception&) {
            fail(std::string("'") + key + "' has the wrong type");
        }
    }

    bool has(const char* key) {
        seen_.insert(key);
        return doc_.contains(key);
    }

    const json& at(const char* key) {
        seen_.insert(key);
        return doc_.at(key);
    }

    void finish() const {
        for (const auto& [k, v] : doc_.items())
            if (!seen_.count(k)) fail("unknown key '" + k + "'");
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(where_ + ": " + msg); }

private:
    const json& doc_;
    std::string where_;
    std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

}  // namespace

std::uint64_t named_seed(std::uint64_t seed, std::string_view module) {
    std::vector<std::uint32_t> words = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    for (unsigned char c : module) words.push_back(c);
    std::seed_seq seq(words.begin(), words.end());
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return static_cast<std::uint64_t>(out[0]) << 32 | out[1];
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
    RunConfig cfg;
    Section top(doc, "config");
    top.read("seed", cfg.seed);

    std::string out_dir;
    top.read("output_dir", out_dir);
    if (!out_dir.empty()) cfg.output_dir = resolve(base_dir, out_dir);

    if (!top.has("data")) top.fail("missing 'data'");
    {
        Section data(top.at("data"), "config.data");
        std::string scheme = "binary";
        data.read("label_scheme", scheme);
        cfg.data.load.scheme = dataset::parse_label_scheme(scheme);
        data.read("label_column", cfg.data.load.label_column);
        data.read("timestamp_column", cfg.data.load.timestamp_column);
        data.read("train_fraction", cfg.data.load.train_fraction);
        std::string edge_map;
        data.read("edge_map", edge_map);
        if (!edge_map.empty()) cfg.data.edge_map = resolve(base_dir, edge_map);

        const int sources = int(data.has("synthetic")) + int(data.has("csv")) + int(data.has("train"));
        if (sources != 1) data.fail("exactly one of 'synthetic', 'csv', or 'train'/'test' is required");
        if (data.has("synthetic")) {
            cfg.data.kind = DataKind::Synthetic;
            const auto& s = data.at("synthetic");
            const auto seed = named_seed(cfg.seed, "synthetic");
            if (s.is_string()) {
                if (s.get<std::string>() != "default") data.fail("'synthetic' must be \"default\" or an object");
                cfg.data.synthetic = dataset::default_synthetic_spec(seed);
            } else {
                auto spec = dataset::synthetic_spec_from_json(s);
                if (!s.contains("attack_windows")) spec.attack_windows = dataset::default_synthetic_spec().attack_windows;
                if (!s.contains("seed")) spec.seed = seed;
                dataset::validate(spec);
                cfg.data.synthetic = std::move(spec);
            }
        } else if (data.has("csv")) {
            cfg.data.kind = DataKind::Csv;
            std::string p;
            data.read("csv", p);
            cfg.data.csv = resolve(base_dir, p);
            if (!(cfg.data.load.train_fraction > 0.0 && cfg.data.load.train_fraction < 1.0))
                data.fail("'train_fraction' must lie in (0, 1) for single-file input");
        } else {
            cfg.data.kind = DataKind::CsvPair;
            std::string tr, te;
            data.read("train", tr);
            data.read("test", te);
            if (te.empty()) data.fail("'test' is required with 'train'");
            cfg.data.train = resolve(base_dir, tr);
            cfg.data.test = resolve(base_dir, te);
        }
        if (cfg.data.kind != DataKind::Synthetic && !cfg.data.edge_map)
            data.fail("'edge_map' is required for csv input");
        data.finish();
    }

    if (top.has("aggregation")) {
        Section agg(top.at("aggregation"), "config.aggregation");
        agg.read("B", cfg.aggregation.scale);
        cfg.aggregation.stride = cfg.aggregation.scale + 1;
        agg.read("stride", cfg.aggregation.stride);
        agg.read("sampling_period", cfg.aggregation.sampling_period);
        agg.finish();
    }
    preprocess::validate(cfg.aggregation);

    if (top.has("e")) {
        const auto& e = top.at("e");
        if (e.is_string() && e.get<std::string>() == "auto")
            cfg.e.reset();
        else if (e.is_number_integer() && e.get<long>() >= 0)
            cfg.e = e.get<long>();
        else
            top.fail("'e' must be a nonnegative integer or \"auto\"");
    }

    if (top.has("graph")) {
        Section g(top.at("graph"), "config.graph");
        g.read("p_threshold", cfg.graph.threshold);
        g.read("alpha", cfg.graph.alpha);
        g.read("absolute", cfg.graph.absolute);
        g.finish();
    }
    require(cfg.graph.threshold >= -1.0 && cfg.graph.threshold <= 1.0, "config.graph: 'p_threshold' must lie in [-1, 1]");
    require(cfg.graph.alpha > 0.0 && cfg.graph.alpha <= 1.0, "config.graph: 'alpha' must lie in (0, 1]");

    cfg.cloud.train.seed = named_seed(cfg.seed, "gcrl");
    if (top.has("gcrl")) {
        Section g(top.at("gcrl"), "config.gcrl");
        g.read("layers", cfg.cloud.model.layers);
        g.read("hidden", cfg.cloud.model.hidden);
        g.read("n_classes", cfg.cloud.model.n_classes);
        g.read("max_epochs", cfg.cloud.train.max_epochs);
        g.read("patience", cfg.cloud.train.patience);
        g.read("min_improvement", cfg.cloud.train.min_improvement);
        g.read("batch_size", cfg.cloud.train.batch_size);
        g.read("validation_fraction", cfg.cloud.train.validation_fraction);
        g.read("learning_rate", cfg.cloud.train.adam.learning_rate);
        g.read("resample_factor", cfg.cloud.resample_factor);
        g.finish();
    }
    const auto& c = cfg.cloud;
    require(c.model.layers >= 1, "config.gcrl: 'layers' must be >= 1");
    require(c.model.hidden >= 1, "config.gcrl: 'hidden' must be >= 1");
    require(c.model.n_classes >= 2, "config.gcrl: 'n_classes' must be >= 2");
    require(c.train.max_epochs >= 1, "config.gcrl: 'max_epochs' must be >= 1");
    require(c.train.min_improvement >= 0.0, "config.gcrl: 'min_improvement' must be >= 0");
    require(c.train.batch_size >= 1, "config.gcrl: 'batch_size' must be >= 1");
    require(c.train.validation_fraction > 0.0 && c.train.validation_fraction < 1.0,
            "config.gcrl: 'validation_fraction' must lie in (0, 1)");
    require(c.train.adam.learning_rate > 0.0, "config.gcrl: 'learning_rate' must be > 0");
    require(c.resample_factor >= 1, "config.gcrl: 'resample_factor' must be >= 1");

    top.finish();
    return cfg;
}

RunConfig read_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path.string() + "': " + e.what());
    }
    return parse_run_config(doc, path.parent_path());
}

void check_inputs(const RunConfig& config) {
    auto exists = [](const std::filesystem::path& p, const char* what) {
        if (!std::filesystem::is_regular_file(p))
            throw ConfigError(std::string(what) + " file not found: '" + p.string() + "'");
    };
    switch (config.data.kind) {
        case DataKind::Synthetic: break;
        case DataKind::Csv: exists(config.data.csv, "data"); break;
        case DataKind::CsvPair:
            exists(config.data.train, "training");
            exists(config.data.test, "test");
            break;
    }
    if (config.data.edge_map) exists(*config.data.edge_map, "edge map");
}

dataset::DatasetSplit load_data(const RunConfig& config) {
    check_inputs(config);
    switch (config.data.kind) {
        case DataKind::Synthetic: return dataset::generate_synthetic(config.data.synthetic);
        case DataKind::Csv:
            return dataset::load_csv(config.data.csv, dataset::read_edge_map(*config.data.edge_map), config.data.load);
        case DataKind::CsvPair:
            return dataset::load_csv_pair(config.data.train, config.data.test,
                                          dataset::read_edge_map(*config.data.edge_map), config.data.load);
    }
    throw ConfigError("unknown data source");
}

json to_json(const RunConfig& cfg) {
    json data;
    switch (cfg.data.kind) {
        case DataKind::Synthetic: data["synthetic"] = dataset::to_json(cfg.data.synthetic); break;
        case DataKind::Csv:
            data["csv"] = cfg.data.csv.string();
            data["train_fraction"] = cfg.data.load.train_fraction;
            break;
        case DataKind::CsvPair:
            data["train"] = cfg.data.train.string();
            data["test"] = cfg.data.test.string();
            break;
    }
    if (cfg.data.edge_map) data["edge_map"] = cfg.data.edge_map->string();
    data["label_scheme"] = cfg.data.load.scheme == dataset::LabelScheme::Binary ? "binary" : "multiclass";
    data["label_column"] = cfg.data.load.label_column;
    data["timestamp_column"] = cfg.data.load.timestamp_column;
    const auto& c = cfg.cloud;
    return {{"seed", cfg.seed},
            {"output_dir", cfg.output_dir.string()},
            {"data", data},
            {"aggregation",
             {{"B", cfg.aggregation.scale},
              {"stride", cfg.aggregation.stride},
              {"sampling_period", cfg.aggregation.sampling_period}}},
            {"e", cfg.e ? json(*cfg.e) : json("auto")},
            {"graph",
             {{"p_threshold", cfg.graph.threshold}, {"alpha", cfg.graph.alpha}, {"absolute", cfg.graph.absolute}}},
            {"gcrl",
             {{"layers", c.model.layers},
              {"hidden", c.model.hidden},
              {"n_classes", c.model.n_classes},
              {"max_epochs", c.train.max_epochs},
              {"patience", c.train.patience},
              {"min_improvement", c.train.min_improvement},
              {"batch_size", c.train.batch_size},
              {"validation_fraction", c.train.validation_fraction},
              {"learning_rate", c.train.adam.learning_rate},
              {"resample_factor", c.resample_factor}}}};
}

}  // namespace cloudedge
