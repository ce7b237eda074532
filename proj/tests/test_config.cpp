#include <doctest.h>

#include <fstream>

#include "cloudedge/config.hpp"
#include "cloudedge/error.hpp"
#include "support.hpp"

using namespace cloudedge;
using nlohmann::json;

namespace {

std::string message_of(const json& doc) {
    try {
        (void)parse_run_config(doc);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("minimal synthetic config takes the defaults") {
    const auto cfg = parse_run_config(json::parse(R"({"data": {"synthetic": "default"}})"));
    CHECK(cfg.data.kind == DataKind::Synthetic);
    CHECK(cfg.aggregation.scale == 10);
    CHECK(cfg.aggregation.stride == 11);
    CHECK_FALSE(cfg.e.has_value());
    CHECK(cfg.graph.threshold == 0.65);
    CHECK(cfg.graph.alpha == 0.05);
    CHECK(cfg.cloud.model.layers == 5);
    CHECK(cfg.cloud.model.hidden == 64);
    CHECK(cfg.cloud.resample_factor == 10);
    CHECK(cfg.data.synthetic.seed == named_seed(1, "synthetic"));
    CHECK(cfg.cloud.train.seed == named_seed(1, "gcrl"));
}

TEST_CASE("explicit values are read") {
    const auto cfg = parse_run_config(json::parse(R"({
        "seed": 9, "output_dir": "runs",
        "data": {"train": "a.csv", "test": "b.csv", "edge_map": "m.json", "label_scheme": "multiclass"},
        "aggregation": {"B": 4},
        "e": 3,
        "graph": {"p_threshold": 0.5, "absolute": true},
        "gcrl": {"hidden": 8, "n_classes": 5, "learning_rate": 0.002}})"),
                                      "/base");
    CHECK(cfg.seed == 9);
    CHECK(cfg.output_dir == "/base/runs");
    CHECK(cfg.data.kind == DataKind::CsvPair);
    CHECK(cfg.data.train == "/base/a.csv");
    CHECK(*cfg.data.edge_map == "/base/m.json");
    CHECK(cfg.data.load.scheme == dataset::LabelScheme::MultiClass);
    CHECK(cfg.aggregation.scale == 4);
    CHECK(cfg.aggregation.stride == 5);
    CHECK(*cfg.e == 3);
    CHECK(cfg.graph.threshold == 0.5);
    CHECK(cfg.graph.absolute);
    CHECK(cfg.cloud.model.hidden == 8);
    CHECK(cfg.cloud.model.n_classes == 5);
    CHECK(cfg.cloud.train.adam.learning_rate == 0.002);
    CHECK(cfg.cloud.train.seed == named_seed(9, "gcrl"));
}

TEST_CASE("schema errors name the offending key") {
    CHECK(message_of(json::parse(R"({"data": {"synthetic": "default"}, "colour": 1})")).find("colour") !=
          std::string::npos);
    CHECK(message_of(json::parse(R"({"data": {"synthetic": "default"}, "gcrl": {"hiden": 8}})")).find("hiden") !=
          std::string::npos);
    CHECK(message_of(json::parse(R"({"data": {"synthetic": "default"}, "gcrl": {"hidden": "big"}})"))
              .find("hidden") != std::string::npos);
    CHECK_FALSE(message_of(json::parse(R"({})")).empty());
    CHECK_FALSE(message_of(json::parse(R"({"data": {"csv": "x.csv", "synthetic": "default"}})")).empty());
    CHECK_FALSE(message_of(json::parse(R"({"data": {"csv": "x.csv"}})")).empty());  // no edge map
    CHECK_FALSE(message_of(json::parse(R"({"data": {"train": "x.csv", "edge_map": "m"}})")).empty());
    CHECK_FALSE(message_of(json::parse(R"({"data": {"synthetic": "big"}})")).empty());
    CHECK_FALSE(message_of(json::parse(R"({"data": {"synthetic": "default"}, "e": -2})")).empty());
    CHECK_FALSE(message_of(json::parse(R"({"data": {"synthetic": "default"}, "e": "soon"})")).empty());
    CHECK_FALSE(message_of(json::parse(R"({"data": {"synthetic": "default"}, "aggregation": {"B": 0}})")).empty());
    CHECK_FALSE(message_of(json::parse(R"({"data": {"synthetic": "default"}, "graph": {"alpha": 0}})")).empty());
    CHECK_FALSE(message_of(json::parse(R"({"data": {"synthetic": "default"}, "gcrl": {"n_classes": 1}})")).empty());
    CHECK_FALSE(
        message_of(json::parse(R"({"data": {"synthetic": "default"}, "gcrl": {"validation_fraction": 1.0}})"))
            .empty());
    CHECK_FALSE(message_of(json::parse(R"({"data": {"synthetic": "default", "label_scheme": "x"}})")).empty());
}

TEST_CASE("missing input files are reported by path") {
    const auto dir = testing::scratch_dir("config_inputs");
    const auto cfg = parse_run_config(
        json::parse(R"({"data": {"train": "tr.csv", "test": "te.csv", "edge_map": "m.json"}})"), dir);
    try {
        check_inputs(cfg);
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("tr.csv") != std::string::npos);
    }
    CHECK_THROWS_AS(read_run_config(dir / "nope.json"), ConfigError);
    std::ofstream(dir / "broken.json") << "{ not json";
    CHECK_THROWS_AS(read_run_config(dir / "broken.json"), ConfigError);
}

TEST_CASE("to_json round trips through the parser") {
    const auto cfg = parse_run_config(json::parse(R"({"seed": 4, "data": {"synthetic": "default"}, "e": 2})"));
    const auto back = parse_run_config(to_json(cfg));
    CHECK(to_json(back) == to_json(cfg));
    CHECK(*back.e == 2);
}

TEST_CASE("named seeds are deterministic and distinct") {
    CHECK(named_seed(1, "gcrl") == named_seed(1, "gcrl"));
    CHECK(named_seed(1, "gcrl") != named_seed(2, "gcrl"));
    CHECK(named_seed(1, "gcrl") != named_seed(1, "synthetic"));
    CHECK(named_seed(1ULL << 40, "x") != named_seed(0, "x"));
}

}  // TEST_SUITE
