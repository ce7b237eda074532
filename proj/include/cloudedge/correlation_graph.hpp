#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cloudedge/dataset.hpp"

namespace cloudedge::graph {

/// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x);

struct SpearmanResult {
    double rho = 0.0;
    bool degenerate = false;  // a series was constant
};

/// Pearson correlation of the average-rank vectors.
SpearmanResult spearman_rho(std::span<const double> x, std::span<const double> y);

/// Two-sided p-value of rho under the Student-t approximation with n - 2
/// degrees of freedom; |rho| = 1 gives 0.
double significance(double rho, std::size_t n);

inline constexpr double kDefaultThreshold = 0.65;
inline constexpr double kDefaultAlpha = 0.05;

struct GraphOptions {
    double threshold = kDefaultThreshold;  // p: minimum correlation
    double alpha = kDefaultAlpha;
    bool absolute = false;  // compare |rho| instead of signed rho
};

class CorrelationGraph {
public:
    CorrelationGraph() = default;
    explicit CorrelationGraph(std::vector<std::string> names);

    std::size_t size() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }

    double rho(std::size_t z, std::size_t c) const { return rho_.at(z * size() + c); }
    double pval(std::size_t z, std::size_t c) const { return pval_.at(z * size() + c); }
    bool connected(std::size_t z, std::size_t c) const { return adjacency_.at(z * size() + c) != 0; }
    std::size_t edge_count() const;

    /// Row-major 0/1 adjacency, zero diagonal.
    const std::vector<int>& adjacency() const noexcept { return adjacency_; }

    void set_pair(std::size_t z, std::size_t c, double rho, double pval);
    void apply(const GraphOptions& options);

    const GraphOptions& options() const noexcept { return options_; }
    /// FNV-1a over the adjacency, for model cards.
    std::string hash() const;

private:
    std::vector<std::string> names_;
    std::vector<double> rho_;
    std::vector<double> pval_;
    std::vector<int> adjacency_;
    GraphOptions options_;
};

CorrelationGraph build_graph(std::span<const dataset::SensorFrame> train, const std::vector<std::string>& names,
                             const GraphOptions& options = {});

nlohmann::json to_json(const CorrelationGraph& graph);
CorrelationGraph graph_from_json(const nlohmann::json& doc);

/// One line per edge: `name_z name_c rho pval`.
void write_edge_list(std::ostream& out, const CorrelationGraph& graph);

}  // namespace cloudedge::graph
