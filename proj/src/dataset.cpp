#include "cloudedge/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "cloudedge/error.hpp"

namespace cloudedge::dataset {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_row(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

bool parse_real(std::string_view cell, double& out) {
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc{} && ptr == cell.data() + cell.size() && std::isfinite(out);
}

std::string row_error(std::size_t row, std::string_view what) {
    std::ostringstream os;
    os << "row " << row << " (line " << row + 1 << "): " << what;
    return os.str();
}

int decode_label(double raw, LabelScheme scheme, std::size_t row) {
    if (raw != std::floor(raw)) throw ConfigError(row_error(row, "label is not an integer"));
    const int v = static_cast<int>(raw);
    if (scheme == LabelScheme::Binary) {
        if (v != kBinaryAbnormal && v != kBinaryNormal)
            throw ConfigError(row_error(row, "binary label must be 0 or 1"));
        return from_binary_label(v);
    }
    if (v < 0) throw ConfigError(row_error(row, "class id must be non-negative"));
    return v;
}

int encode_label(int class_id, LabelScheme scheme) {
    return scheme == LabelScheme::Binary ? to_binary_label(class_id) : class_id;
}

}  // namespace

LabelScheme parse_label_scheme(const std::string& name) {
    if (name == "binary") return LabelScheme::Binary;
    if (name == "multiclass") return LabelScheme::MultiClass;
    throw ConfigError("unknown label scheme '" + name + "' (expected binary or multiclass)");
}

std::vector<int> DatasetSplit::edge_ids() const {
    std::set<int> ids(edge_assignment.begin(), edge_assignment.end());
    return {ids.begin(), ids.end()};
}

std::vector<std::size_t> DatasetSplit::sensors_of_edge(int edge) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < edge_assignment.size(); ++i)
        if (edge_assignment[i] == edge) out.push_back(i);
    return out;
}

ClassCounts count_classes(std::span<const SensorFrame> frames) {
    ClassCounts c;
    for (const auto& f : frames) (f.abnormal() ? c.abnormal : c.normal)++;
    return c;
}

LabeledTable read_table(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path.string() + ": missing header row");
    const auto header = split_row(line);

    std::ptrdiff_t label_col = -1;
    std::ptrdiff_t time_col = -1;
    std::vector<std::size_t> sensor_cols;
    LabeledTable table;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == options.label_column) {
            label_col = static_cast<std::ptrdiff_t>(c);
        } else if (header[c] == options.timestamp_column) {
            time_col = static_cast<std::ptrdiff_t>(c);
        } else {
            sensor_cols.push_back(c);
            table.sensor_names.emplace_back(header[c]);
        }
    }
    if (label_col < 0) throw ConfigError(path.string() + ": label column '" + options.label_column + "' not found");
    if (sensor_cols.empty()) throw ConfigError(path.string() + ": no sensor columns");

    const double missing = std::numeric_limits<double>::quiet_NaN();
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto cells = split_row(line);
        if (cells.size() != header.size()) {
            std::ostringstream os;
            os << "expected " << header.size() << " cells, found " << cells.size();
            throw ConfigError(row_error(row, os.str()));
        }
        SensorFrame frame;
        double label_raw = 0.0;
        if (!parse_real(cells[static_cast<std::size_t>(label_col)], label_raw))
            throw ConfigError(row_error(row, "label is missing or non-numeric"));
        frame.label = decode_label(label_raw, options.scheme, row);

        if (time_col >= 0) {
            auto cell = cells[static_cast<std::size_t>(time_col)];
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), frame.timestamp);
            if (ec != std::errc{} || ptr != cell.data() + cell.size())
                throw ConfigError(row_error(row, "timestamp is not an integer"));
        } else {
            frame.timestamp = static_cast<std::int64_t>(row - 1);
        }

        frame.values.reserve(sensor_cols.size());
        for (std::size_t c : sensor_cols) {
            const auto cell = cells[c];
            if (cell.empty()) {
                frame.values.push_back(missing);
                continue;
            }
            double v = 0.0;
            if (!parse_real(cell, v))
                throw ConfigError(row_error(row, "non-numeric value '" + std::string(cell) + "' in column '" +
                                                     std::string(header[c]) + "'"));
            frame.values.push_back(v);
        }
        table.frames.push_back(std::move(frame));
    }
    if (table.frames.empty()) throw ConfigError(path.string() + ": no data rows");

    std::stable_sort(table.frames.begin(), table.frames.end(),
                     [](const SensorFrame& a, const SensorFrame& b) { return a.timestamp < b.timestamp; });

    // forward-fill, then back-fill leading gaps
    for (std::size_t s = 0; s < sensor_cols.size(); ++s) {
        std::ptrdiff_t first_valid = -1;
        for (std::size_t r = 0; r < table.frames.size(); ++r) {
            double& v = table.frames[r].values[s];
            if (std::isnan(v)) {
                if (first_valid >= 0) {
                    v = table.frames[r - 1].values[s];
                    ++table.missing_filled;
                }
            } else if (first_valid < 0) {
                first_valid = static_cast<std::ptrdiff_t>(r);
            }
        }
        if (first_valid < 0) throw ConfigError(path.string() + ": column '" + table.sensor_names[s] + "' is empty");
        const double lead = table.frames[static_cast<std::size_t>(first_valid)].values[s];
        for (std::ptrdiff_t r = 0; r < first_valid; ++r) {
            table.frames[static_cast<std::size_t>(r)].values[s] = lead;
            ++table.missing_filled;
        }
    }
    return table;
}

std::vector<int> resolve_edge_map(const std::vector<std::string>& sensor_names, const EdgeMap& edge_map) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < sensor_names.size(); ++i) index.emplace(sensor_names[i], i);
    std::vector<int> assignment(sensor_names.size(), 0);
    for (const auto& [name, edge] : edge_map) {
        auto it = index.find(name);
        if (it == index.end()) throw ConfigError("edge map names unknown sensor '" + name + "'");
        if (edge < 1) throw ConfigError("edge id for sensor '" + name + "' must be >= 1");
        assignment[it->second] = edge;
    }
    for (std::size_t i = 0; i < sensor_names.size(); ++i)
        if (assignment[i] == 0) throw ConfigError("sensor '" + sensor_names[i] + "' is not assigned to an edge");
    return assignment;
}

DatasetSplit load_csv(const std::filesystem::path& path, const EdgeMap& edge_map, const LoadOptions& options) {
    if (options.train_fraction < 0.0 || options.train_fraction > 1.0)
        throw ConfigError("train_fraction must lie in [0, 1]");
    auto table = read_table(path, options);
    DatasetSplit split;
    split.edge_assignment = resolve_edge_map(table.sensor_names, edge_map);
    split.sensor_names = std::move(table.sensor_names);
    const auto n_train = static_cast<std::size_t>(std::floor(options.train_fraction * static_cast<double>(table.frames.size())));
    split.train.assign(std::make_move_iterator(table.frames.begin()),
                       std::make_move_iterator(table.frames.begin() + static_cast<std::ptrdiff_t>(n_train)));
    split.test.assign(std::make_move_iterator(table.frames.begin() + static_cast<std::ptrdiff_t>(n_train)),
                      std::make_move_iterator(table.frames.end()));
    return split;
}

DatasetSplit load_csv_pair(const std::filesystem::path& train_path, const std::filesystem::path& test_path,
                           const EdgeMap& edge_map, const LoadOptions& options) {
    auto train = read_table(train_path, options);
    auto test = read_table(test_path, options);
    if (train.sensor_names != test.sensor_names)
        throw ConfigError("train and test files have different sensor columns");
    if (train.frames.back().timestamp >= test.frames.front().timestamp)
        throw ConfigError("test split must start after the training split ends");
    DatasetSplit split;
    split.edge_assignment = resolve_edge_map(train.sensor_names, edge_map);
    split.sensor_names = std::move(train.sensor_names);
    split.train = std::move(train.frames);
    split.test = std::move(test.frames);
    return split;
}

void write_csv(std::ostream& out, const std::vector<std::string>& sensor_names, std::span<const SensorFrame> frames,
               LabelScheme scheme) {
    out << "timestamp";
    for (const auto& n : sensor_names) out << ',' << n;
    out << ",label\n";
    char buf[64];
    for (const auto& f : frames) {
        out << f.timestamp;
        for (double v : f.values) {
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
            out << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
        }
        out << ',' << encode_label(f.label, scheme) << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& sensor_names,
               std::span<const SensorFrame> frames, LabelScheme scheme) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    write_csv(out, sensor_names, frames, scheme);
}

std::vector<SensorFrame> resample_abnormal(std::span<const SensorFrame> train, std::size_t factor) {
    if (factor < 1) throw ConfigError("resample factor must be >= 1");
    std::vector<SensorFrame> out;
    out.reserve(train.size());
    for (const auto& f : train) {
        const std::size_t copies = f.abnormal() ? factor : 1;
        for (std::size_t k = 0; k < copies; ++k) out.push_back(f);
    }
    return out;
}

// {"edges": {"1": ["S01", "S02"], "2": ["S03"]}}
EdgeMap edge_map_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("edges") || !doc["edges"].is_object())
        throw ConfigError("edge map must be an object with an \"edges\" object");
    EdgeMap map;
    for (const auto& [key, sensors] : doc["edges"].items()) {
        int edge = 0;
        auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), edge);
        if (ec != std::errc{} || ptr != key.data() + key.size() || edge < 1)
            throw ConfigError("edge id '" + key + "' is not a positive integer");
        if (!sensors.is_array()) throw ConfigError("edge '" + key + "' must list sensor names");
        for (const auto& s : sensors) {
            if (!s.is_string()) throw ConfigError("edge '" + key + "' contains a non-string sensor name");
            if (!map.emplace(s.get<std::string>(), edge).second)
                throw ConfigError("sensor '" + s.get<std::string>() + "' assigned to more than one edge");
        }
    }
    return map;
}

nlohmann::json edge_map_to_json(const DatasetSplit& split) {
    nlohmann::json edges = nlohmann::json::object();
    for (int edge : split.edge_ids()) {
        auto arr = nlohmann::json::array();
        for (auto i : split.sensors_of_edge(edge)) arr.push_back(split.sensor_names[i]);
        edges[std::to_string(edge)] = std::move(arr);
    }
    return {{"edges", std::move(edges)}};
}

EdgeMap read_edge_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open edge map " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return edge_map_from_json(doc);
}

}  // namespace cloudedge::dataset
