#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace cloudedge::harness {

/// One published detection row: sensitivity, tallies and derived counts.
struct PublishedRow {
    long e = 0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    double fnr_percent = 0.0;
    std::size_t k_times = 0;
    std::int64_t rtl = 0;
};

struct PublishedSetup {
    std::size_t n_samples = 35581;
    std::size_t n_sensors = 127;
    std::size_t scale = 10;
    std::size_t abnormal_windows = 196;  // TP + FN on every row
};

const std::vector<PublishedRow>& published_detection_rows();
PublishedSetup published_setup();

struct RowCheck {
    PublishedRow row;
    std::size_t fn = 0;
    std::size_t k_times = 0;
    std::int64_t rtl = 0;
    double fnr_percent = 0.0;
    bool k_times_ok = false;
    bool rtl_ok = false;
    bool fnr_ok = false;  // within 0.01 percentage points

    bool consistent() const noexcept { return k_times_ok && rtl_ok && fnr_ok; }
};

std::vector<RowCheck> check_detection_rows();

struct F1Check {
    double precision = 0.9916;
    double recall = 0.9297;
    double published_f1 = 0.96;
    double f1 = 0.0;
    bool ok = false;  // |f1 - 0.9597| <= 0.0005 and rounds to the published value
};

F1Check check_classification_row();

nlohmann::json to_json(const RowCheck& check);
nlohmann::json to_json(const F1Check& check);

}  // namespace cloudedge::harness
