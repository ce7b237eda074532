#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cloudedge/dataset.hpp"
#include "cloudedge/error.hpp"
#include "cloudedge/synthetic.hpp"
#include "support.hpp"

using namespace cloudedge;
using namespace cloudedge::dataset;

namespace {

std::filesystem::path write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream(path) << text;
    return path;
}

EdgeMap three_sensor_map() { return {{"a", 1}, {"b", 1}, {"c", 2}}; }

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("label conventions cross between binary and multi-class") {
    CHECK(to_binary_label(kNormalClass) == kBinaryNormal);
    CHECK(to_binary_label(3) == kBinaryAbnormal);
    CHECK(from_binary_label(kBinaryNormal) == kNormalClass);
    CHECK(from_binary_label(kBinaryAbnormal) == 1);
    CHECK(parse_label_scheme("binary") == LabelScheme::Binary);
    CHECK(parse_label_scheme("multiclass") == LabelScheme::MultiClass);
    CHECK_THROWS_AS(parse_label_scheme("ternary"), ConfigError);
}

TEST_CASE("four-row csv with one abnormal label") {
    const auto dir = testing::scratch_dir("csv4");
    const auto path = write_file(dir / "d.csv",
                                 "timestamp,a,b,c,label\n"
                                 "0,1.0,2.0,3.0,1\n"
                                 "1,1.5,2.5,3.5,1\n"
                                 "2,9.0,9.0,9.0,0\n"
                                 "3,1.0,2.0,3.0,1\n");
    LoadOptions opt;
    opt.train_fraction = 0.5;
    const auto split = load_csv(path, three_sensor_map(), opt);
    CHECK(split.train.size() + split.test.size() == 4);
    CHECK(split.train.size() == 2);
    CHECK(split.n_sensors() == 3);
    CHECK(count_classes(split.train).abnormal + count_classes(split.test).abnormal == 1);
    CHECK(split.test.front().abnormal());
    CHECK(split.edge_assignment == std::vector<int>{1, 1, 2});
    CHECK(split.sensors_of_edge(1) == std::vector<std::size_t>{0, 1});
    CHECK(split.edge_ids() == std::vector<int>{1, 2});
}

TEST_CASE("non-numeric cell names its row") {
    const auto dir = testing::scratch_dir("csvbad");
    std::ostringstream text;
    text << "timestamp,a,b,c,label\n";
    for (int r = 1; r <= 8; ++r) text << r << ',' << (r == 7 ? "oops" : "1.0") << ",2,3,1\n";
    const auto path = write_file(dir / "d.csv", text.str());
    LoadOptions opt;
    opt.train_fraction = 0.5;
    try {
        (void)load_csv(path, three_sensor_map(), opt);
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("row 7") != std::string::npos);
    }
}

TEST_CASE("rows are sorted and gaps forward- then back-filled") {
    const auto dir = testing::scratch_dir("csvfill");
    const auto path = write_file(dir / "d.csv",
                                 "timestamp,a,b,c,label\n"
                                 "2,,5,1,1\n"
                                 "0,,4,1,1\n"
                                 "1,7,,1,1\n"
                                 "3,8,6,,1\n");
    const auto table = read_table(path, {});
    REQUIRE(table.frames.size() == 4);
    CHECK(table.frames[0].timestamp == 0);
    CHECK(table.frames[0].values[0] == 7.0);  // back-filled
    CHECK(table.frames[2].values[0] == 7.0);  // forward-filled
    CHECK(table.frames[1].values[1] == 4.0);
    CHECK(table.frames[3].values[2] == 1.0);
    CHECK(table.missing_filled == 4);
}

TEST_CASE("edge map must cover every sensor with known names") {
    const std::vector<std::string> names = {"a", "b", "c"};
    CHECK_THROWS_AS(resolve_edge_map(names, {{"a", 1}, {"b", 1}}), ConfigError);
    CHECK_THROWS_AS(resolve_edge_map(names, {{"a", 1}, {"b", 1}, {"c", 1}, {"zz", 2}}), ConfigError);
    CHECK(resolve_edge_map(names, three_sensor_map()) == std::vector<int>{1, 1, 2});

    const auto doc = nlohmann::json::parse(R"({"edges": {"1": ["a", "b"], "2": ["c"]}})");
    CHECK(edge_map_from_json(doc) == three_sensor_map());
    CHECK_THROWS_AS(edge_map_from_json(nlohmann::json::parse(R"({"edges": {"1": ["a"], "2": ["a"]}})")),
                    ConfigError);
}

TEST_CASE("csv round trip keeps every bit") {
    auto spec = default_synthetic_spec(3);
    spec.duration = 600;
    spec.train_duration = 300;
    spec.attack_windows.resize(1);
    spec.attack_windows[0].start = 100;
    spec.attack_windows[0].end = 120;
    const auto split = generate_synthetic(spec);
    const auto dir = testing::scratch_dir("roundtrip");
    write_csv(dir / "train.csv", split.sensor_names, split.train, LabelScheme::MultiClass);
    write_csv(dir / "test.csv", split.sensor_names, split.test, LabelScheme::MultiClass);
    std::ofstream(dir / "edges.json") << edge_map_to_json(split).dump();
    LoadOptions opt;
    opt.scheme = LabelScheme::MultiClass;
    const auto back = load_csv_pair(dir / "train.csv", dir / "test.csv", read_edge_map(dir / "edges.json"), opt);
    CHECK(back == split);
}

TEST_CASE("binary csv labels map onto the internal convention") {
    const auto dir = testing::scratch_dir("binlabels");
    std::vector<SensorFrame> frames = {{0, {1.0}, kNormalClass}, {1, {2.0}, 4}};
    write_csv(dir / "b.csv", {"a"}, frames, LabelScheme::Binary);
    std::ifstream in(dir / "b.csv");
    std::string header, r0, r1;
    std::getline(in, header);
    std::getline(in, r0);
    std::getline(in, r1);
    CHECK(r0.back() == '1');
    CHECK(r1.back() == '0');
    const auto table = read_table(dir / "b.csv", {});
    CHECK(table.frames[0].label == kNormalClass);
    CHECK(table.frames[1].abnormal());
}

TEST_CASE("resampling multiplies abnormal frames only") {
    std::vector<SensorFrame> train;
    for (int i = 0; i < 5; ++i) train.push_back({i, {double(i)}, i == 1 || i == 3 ? 2 : kNormalClass});
    const auto out = resample_abnormal(train, 10);
    const auto c = count_classes(out);
    CHECK(c.abnormal == 20);
    CHECK(c.normal == 3);
    CHECK(out[0].timestamp == 0);
    for (int k = 1; k <= 10; ++k) CHECK(out[static_cast<std::size_t>(k)].timestamp == 1);
    CHECK(out[11].timestamp == 2);
    CHECK(resample_abnormal(train, 1) == train);
    CHECK_THROWS_AS(resample_abnormal(train, 0), ConfigError);
}

TEST_CASE("resampling a large abnormal block is exact") {
    std::vector<SensorFrame> train(7843, SensorFrame{0, {0.0}, 1});
    train.resize(8000, SensorFrame{0, {0.0}, kNormalClass});
    const auto c = count_classes(resample_abnormal(train, 10));
    CHECK(c.abnormal == 78430);
    CHECK(c.normal == 157);
}

TEST_CASE("synthetic generator") {
    SUBCASE("no attacks means no abnormal labels") {
        auto spec = default_synthetic_spec(1);
        spec.attack_windows.clear();
        const auto split = generate_synthetic(spec);
        CHECK(count_classes(split.train).abnormal == 0);
        CHECK(count_classes(split.test).abnormal == 0);
        CHECK(split.train.size() == 12100);
        CHECK(split.test.size() == 7900);
    }
    SUBCASE("an attack shifts exactly its sensors by the stated magnitude") {
        auto spec = default_synthetic_spec(5);
        spec.attack_windows.clear();
        const auto clean = generate_synthetic(spec);
        spec.attack_windows.push_back({200, 260, 3, {0, 1, 2}, 6.0});
        const auto hit = generate_synthetic(spec);
        for (std::size_t t = 0; t < clean.train.size(); ++t) {
            const bool inside = t >= 200 && t < 260;
            CHECK(hit.train[t].label == (inside ? 3 : kNormalClass));
            for (std::size_t i = 0; i < 12; ++i) {
                const double d = hit.train[t].values[i] - clean.train[t].values[i];
                if (inside && i < 3)
                    CHECK(d > 0.5);
                else
                    CHECK(d == 0.0);
            }
        }
        // shift equals 6 stationary std: recover the gain from the clean series spread
        const double d0 = hit.train[210].values[0] - clean.train[210].values[0];
        const double d1 = hit.train[250].values[0] - clean.train[250].values[0];
        CHECK(d0 == doctest::Approx(d1).epsilon(1e-12));
        const double sd = stationary_std(spec.base, 0.5);
        const double sd_max = stationary_std(spec.base, 2.0);
        CHECK(d0 >= 6.0 * sd * (1 - 1e-12));
        CHECK(d0 <= 6.0 * sd_max * (1 + 1e-12));
    }
    SUBCASE("same seed twice is identical; another seed differs") {
        const auto a = generate_synthetic(default_synthetic_spec(9));
        const auto b = generate_synthetic(default_synthetic_spec(9));
        const auto c = generate_synthetic(default_synthetic_spec(10));
        CHECK(a == b);
        CHECK_FALSE(a == c);
        std::ostringstream sa, sb;
        write_csv(sa, a.sensor_names, a.test, LabelScheme::MultiClass);
        write_csv(sb, b.sensor_names, b.test, LabelScheme::MultiClass);
        CHECK(sa.str() == sb.str());
    }
    SUBCASE("overlapping windows with different types are rejected") {
        auto spec = default_synthetic_spec(1);
        spec.attack_windows = {{100, 200, 1, {0}, 6.0}, {150, 250, 2, {1}, 6.0}};
        CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
        spec.attack_windows[1].attack_type = 1;
        CHECK_NOTHROW(generate_synthetic(spec));
        spec.attack_windows = {{100, 200, 1, {}, 6.0}};
        CHECK_THROWS_AS(validate(spec), ConfigError);
    }
    SUBCASE("sensors within an edge are strongly associated") {
        const auto split = generate_synthetic(default_synthetic_spec(2));
        CHECK(split.edge_assignment == std::vector<int>{1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3});
    }
    SUBCASE("spec json round trip") {
        const auto spec = default_synthetic_spec(4);
        const auto back = synthetic_spec_from_json(to_json(spec));
        CHECK(to_json(back) == to_json(spec));
    }
}

}  // TEST_SUITE
