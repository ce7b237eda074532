#include "cloudedge/correlation_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "cloudedge/error.hpp"

namespace cloudedge::graph {

std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j - 1) + 1.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
        i = j;
    }
    return ranks;
}

namespace {

struct Centered {
    std::vector<double> values;
    double norm = 0.0;
};

Centered center(std::vector<double> ranks) {
    Centered c;
    const double mean = std::accumulate(ranks.begin(), ranks.end(), 0.0) / static_cast<double>(ranks.size());
    for (double& r : ranks) {
        r -= mean;
        c.norm += r * r;
    }
    c.norm = std::sqrt(c.norm);
    c.values = std::move(ranks);
    return c;
}

SpearmanResult correlate(const Centered& a, const Centered& b) {
    if (a.norm == 0.0 || b.norm == 0.0) return {0.0, true};
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
    return {std::clamp(dot / (a.norm * b.norm), -1.0, 1.0), false};
}

}  // namespace

SpearmanResult spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ShapeError("spearman_rho: series lengths differ");
    if (x.size() < 3) throw ConfigError("spearman_rho: need at least 3 observations");
    return correlate(center(average_ranks(x)), center(average_ranks(y)));
}

double significance(double rho, std::size_t n) {
    if (n < 4) throw ConfigError("significance: need n >= 4");
    if (!(std::abs(rho) <= 1.0)) throw ConfigError("significance: |rho| must be <= 1");
    if (std::abs(rho) == 1.0) return 0.0;
    if (rho == 0.0) return 1.0;
    const double dof = static_cast<double>(n - 2);
    const double t = std::abs(rho) * std::sqrt(dof / (1.0 - rho * rho));
    const boost::math::students_t dist(dof);
    return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, t)), 0.0, 1.0);
}

CorrelationGraph::CorrelationGraph(std::vector<std::string> names)
    : names_(std::move(names)),
      rho_(names_.size() * names_.size(), 0.0),
      pval_(names_.size() * names_.size(), 1.0),
      adjacency_(names_.size() * names_.size(), 0) {
    for (std::size_t z = 0; z < size(); ++z) {
        rho_[z * size() + z] = 1.0;
        pval_[z * size() + z] = 0.0;
    }
}

std::size_t CorrelationGraph::edge_count() const {
    return static_cast<std::size_t>(std::count(adjacency_.begin(), adjacency_.end(), 1)) / 2;
}

void CorrelationGraph::set_pair(std::size_t z, std::size_t c, double rho, double pval) {
    const std::size_t n = size();
    rho_.at(z * n + c) = rho_.at(c * n + z) = rho;
    pval_.at(z * n + c) = pval_.at(c * n + z) = pval;
}

void CorrelationGraph::apply(const GraphOptions& options) {
    options_ = options;
    const std::size_t n = size();
    for (std::size_t z = 0; z < n; ++z)
        for (std::size_t c = 0; c < n; ++c) {
            if (z == c) {
                adjacency_[z * n + c] = 0;
                continue;
            }
            const double r = options.absolute ? std::abs(rho_[z * n + c]) : rho_[z * n + c];
            adjacency_[z * n + c] = (r > options.threshold && pval_[z * n + c] < options.alpha) ? 1 : 0;
        }
}

std::string CorrelationGraph::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](unsigned char b) {
        h ^= b;
        h *= 1099511628211ULL;
    };
    for (const auto& name : names_) {
        for (char ch : name) mix(static_cast<unsigned char>(ch));
        mix(0);
    }
    for (int a : adjacency_) mix(static_cast<unsigned char>(a));
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

CorrelationGraph build_graph(std::span<const dataset::SensorFrame> train, const std::vector<std::string>& names,
                             const GraphOptions& options) {
    if (train.size() < 4) throw ConfigError("build_graph: need at least 4 training frames");
    if (!(options.threshold >= -1.0 && options.threshold <= 1.0))
        throw ConfigError("build_graph: threshold must lie in [-1, 1]");
    if (!(options.alpha > 0.0 && options.alpha <= 1.0)) throw ConfigError("build_graph: alpha must lie in (0, 1]");

    const std::size_t n = names.size();
    std::vector<Centered> ranked;
    ranked.reserve(n);
    std::vector<double> series(train.size());
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t t = 0; t < train.size(); ++t) series[t] = train[t].values.at(s);
        ranked.push_back(center(average_ranks(series)));
    }
    CorrelationGraph graph(names);
    for (std::size_t z = 0; z < n; ++z)
        for (std::size_t c = z + 1; c < n; ++c) {
            const auto r = correlate(ranked[z], ranked[c]);
            graph.set_pair(z, c, r.rho, significance(r.rho, train.size()));
        }
    graph.apply(options);
    return graph;
}

nlohmann::json to_json(const CorrelationGraph& graph) {
    const std::size_t n = graph.size();
    nlohmann::json rho = nlohmann::json::array();
    nlohmann::json pval = nlohmann::json::array();
    nlohmann::json adj = nlohmann::json::array();
    for (std::size_t z = 0; z < n; ++z) {
        nlohmann::json r = nlohmann::json::array(), p = nlohmann::json::array(), a = nlohmann::json::array();
        for (std::size_t c = 0; c < n; ++c) {
            r.push_back(graph.rho(z, c));
            p.push_back(graph.pval(z, c));
            a.push_back(graph.connected(z, c) ? 1 : 0);
        }
        rho.push_back(std::move(r));
        pval.push_back(std::move(p));
        adj.push_back(std::move(a));
    }
    const auto& o = graph.options();
    return {{"sensors", graph.names()},
            {"threshold", o.threshold},
            {"alpha", o.alpha},
            {"absolute", o.absolute},
            {"edge_count", graph.edge_count()},
            {"rho", std::move(rho)},
            {"pval", std::move(pval)},
            {"adjacency", std::move(adj)}};
}

CorrelationGraph graph_from_json(const nlohmann::json& doc) {
    try {
        CorrelationGraph graph(doc.at("sensors").get<std::vector<std::string>>());
        const auto& rho = doc.at("rho");
        const auto& pval = doc.at("pval");
        for (std::size_t z = 0; z < graph.size(); ++z)
            for (std::size_t c = z + 1; c < graph.size(); ++c)
                graph.set_pair(z, c, rho.at(z).at(c).get<double>(), pval.at(z).at(c).get<double>());
        GraphOptions o;
        o.threshold = doc.at("threshold").get<double>();
        o.alpha = doc.at("alpha").get<double>();
        o.absolute = doc.value("absolute", false);
        graph.apply(o);
        return graph;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("graph: ") + e.what());
    }
}

void write_edge_list(std::ostream& out, const CorrelationGraph& graph) {
    const auto old = out.precision(17);
    for (std::size_t z = 0; z < graph.size(); ++z)
        for (std::size_t c = z + 1; c < graph.size(); ++c)
            if (graph.connected(z, c))
                out << graph.names()[z] << ' ' << graph.names()[c] << ' ' << graph.rho(z, c) << ' '
                    << graph.pval(z, c) << '\n';
    out.precision(old);
}

}  // namespace cloudedge::graph
