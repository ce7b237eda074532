#include "cloudedge/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>

#include "cloudedge/error.hpp"

namespace cloudedge::numerics {

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
    auto p = stem;
    p += suffix;
    return p;
}

}  // namespace

void append_le_f64(std::vector<unsigned char>& out, std::span<const double> values) {
    for (double v : values) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(bits >> (8 * b)));
    }
}

std::vector<double> read_le_f64(std::span<const unsigned char> bytes) {
    if (bytes.size() % 8 != 0) throw Error("read_le_f64: byte count is not a multiple of 8");
    std::vector<double> out(bytes.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + static_cast<std::size_t>(b)]) << (8 * b);
        out[i] = std::bit_cast<double>(bits);
    }
    return out;
}

void save_checkpoint(const std::filesystem::path& stem, const Checkpoint& checkpoint) {
    const auto bin_path = with_suffix(stem, ".bin");
    std::vector<unsigned char> bytes;
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& t : checkpoint.tensors) {
        tensors.push_back({{"name", t.name}, {"rows", t.value.rows()}, {"cols", t.value.cols()}, {"offset", bytes.size()}});
        append_le_f64(bytes, t.value.data());
    }
    nlohmann::json manifest = {{"format", "cloudedge-checkpoint"},
                               {"version", 1},
                               {"dtype", "float64"},
                               {"byte_order", "little-endian"},
                               {"data_file", bin_path.filename().string()},
                               {"tensors", std::move(tensors)},
                               {"meta", checkpoint.meta}};
    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) throw Error("cannot write " + bin_path.string());
    bin.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    std::ofstream js(with_suffix(stem, ".json"), std::ios::binary);
    if (!js) throw Error("cannot write manifest for " + stem.string());
    js << manifest.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& stem) {
    const auto manifest_path = with_suffix(stem, ".json");
    std::ifstream js(manifest_path);
    if (!js) throw ConfigError("cannot open checkpoint manifest " + manifest_path.string());
    Checkpoint cp;
    try {
        const auto manifest = nlohmann::json::parse(js);
        if (manifest.at("format") != "cloudedge-checkpoint" || manifest.at("dtype") != "float64" ||
            manifest.at("byte_order") != "little-endian")
            throw ConfigError(manifest_path.string() + ": unsupported checkpoint format");
        const auto bin_path = stem.parent_path() / manifest.at("data_file").get<std::string>();
        std::ifstream bin(bin_path, std::ios::binary);
        if (!bin) throw ConfigError("cannot open checkpoint data " + bin_path.string());
        const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
        for (const auto& t : manifest.at("tensors")) {
            const auto rows = t.at("rows").get<std::size_t>();
            const auto cols = t.at("cols").get<std::size_t>();
            const auto offset = t.at("offset").get<std::size_t>();
            if (offset + rows * cols * 8 > bytes.size())
                throw ConfigError(bin_path.string() + ": tensor '" + t.at("name").get<std::string>() + "' out of range");
            auto values = read_le_f64(std::span(bytes).subspan(offset, rows * cols * 8));
            cp.tensors.push_back({t.at("name").get<std::string>(), Matrix(rows, cols, std::move(values))});
        }
        cp.meta = manifest.value("meta", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(manifest_path.string() + ": " + e.what());
    }
    return cp;
}

}  // namespace cloudedge::numerics
