// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "cloudedge/config.hpp"
#include "cloudedge/correlation_graph.hpp"
#include "cloudedge/experiment.hpp"
#include "cloudedge/gcrl.hpp"
#include "cloudedge/harness.hpp"
#include "cloudedge/metrics.hpp"
#include "cloudedge/preprocess.hpp"
#include "cloudedge/synthetic.hpp"
#include "cloudedge/table_check.hpp"

using namespace cloudedge;
using numerics::Matrix;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt(double v, int precision = 6) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

// ---- 1, 2: published arithmetic --------------------------------------------

Outcome table_arithmetic() {
    std::ostringstream d;
    bool ok = true;
    const auto checks = harness::check_detection_rows();
    std::set<long> consistent, flagged;
    for (const auto& c : checks) (c.consistent() ? consistent : flagged).insert(c.row.e);
    for (long e : {23, 24, 25, 26, 27})
        if (!consistent.count(e)) {
            ok = false;
            d << "row e=" << e << " not confirmed; ";
        }
    for (long e : {22, 29, 31, 33})
        if (!flagged.count(e)) {
            ok = false;
            d << "row e=" << e << " not flagged; ";
        }
    const auto s = harness::published_setup();
    const auto e27 = harness::compute_metrics({196, 663, 0, 0}, s.n_samples, s.n_sensors, s.scale);
    if (e27.k_times != 859 || e27.rtl != 3427857) ok = false;
    for (const auto& c : checks)
        if (c.row.e == 23 && c.rtl != 2984627) ok = false;
    const auto f1 = harness::check_classification_row();
    if (!f1.ok || std::abs(f1.f1 - 0.9597) > 0.0005) ok = false;
    d << "confirmed {23..27}, flagged {22,29,31,33}; e=27 k_times=" << e27.k_times << " RTL=" << e27.rtl
      << "; F1=" << fmt(f1.f1, 5);
    return {ok, d.str()};
}

Outcome fnr_arithmetic() {
    const auto s = harness::published_setup();
    const auto m = harness::compute_metrics({193, 0, 3, 0}, s.n_samples, s.n_sensors, s.scale);
    const double pct = 100.0 * *m.fnr;
    return {std::abs(pct - 1.53) <= 0.01, "FNR=" + fmt(pct, 5) + "%"};
}

// ---- 3, 4, 9: GCRL -----------------------------------------------------------

std::vector<int> random_adjacency(std::size_t n, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(0.4);
    std::vector<int> a(n * n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = a[j * n + i] = coin(rng) ? 1 : 0;
    return a;
}

Matrix gaussian(std::size_t r, std::size_t c, std::mt19937_64& rng) {
    std::normal_distribution<double> d;
    Matrix m(r, c);
    for (auto& v : m.data()) v = d(rng);
    return m;
}

gcrl::GcrlConfig config(std::size_t n, std::size_t t, std::size_t h, std::size_t classes) {
    gcrl::GcrlConfig c;
    c.n_sensors = n;
    c.window = t;
    c.hidden = h;
    c.n_classes = classes;
    c.layers = 2;
    return c;
}

Outcome gradient_check() {
    std::mt19937_64 rng(31);
    const std::size_t n = 5;
    const auto params = gcrl::GcrlParams::initialize(config(n, 4, 8, 2),
                                                     gcrl::propagation_matrix(random_adjacency(n, rng), n), 32);
    std::vector<Matrix> xs;
    for (int k = 0; k < 3; ++k) xs.push_back(gaussian(n, 4, rng));
    const std::vector<int> ys = {0, 1, 1};
    const auto lg = gcrl::loss_and_gradients(params, xs, ys);

    std::vector<std::pair<std::size_t, std::size_t>> coords;
    for (std::size_t k = 0; k < params.weights.size(); ++k)
        for (std::size_t i = 0; i < params.weights[k].value.size(); ++i) coords.emplace_back(k, i);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(std::min<std::size_t>(coords.size(), 150));

    const double h = 1e-5;
    double worst = 0.0;
    std::size_t counted = 0;
    for (auto [k, i] : coords) {
        auto plus = params, minus = params;
        plus.weights[k].value[i] += h;
        minus.weights[k].value[i] -= h;
        const double fd =
            (gcrl::loss_and_gradients(plus, xs, ys).loss - gcrl::loss_and_gradients(minus, xs, ys).loss) / (2 * h);
        const double g = lg.gradients[k][i];
        const double rel = std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-6});
        worst = std::max(worst, rel);
        ++counted;
    }
    return {counted >= 100 && worst < 1e-4,
            std::to_string(counted) + " coordinates, max relative error " + fmt(worst, 3)};
}

Outcome residual_identity() {
    std::mt19937_64 rng(41);
    bool ok = true;
    std::size_t layers_checked = 0;
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t n = 6;
        auto c = config(n, 11, 8, 3);
        c.layers = 4;
        auto p = gcrl::GcrlParams::initialize(c, gcrl::propagation_matrix(random_adjacency(n, rng), n), 42 + trial);
        for (std::size_t l = 0; l < c.layers; ++l)
            for (auto slot : {gcrl::GcrlParams::LstmWx, gcrl::GcrlParams::LstmWh, gcrl::GcrlParams::LstmB,
                              gcrl::GcrlParams::LstmWout, gcrl::GcrlParams::LstmBout})
                p.layer(l, slot) = Matrix::zeros_like(p.layer(l, slot));
        numerics::Tape tape;
        const auto trace = gcrl::forward(tape, p, gaussian(n * 3, 11, rng));
        for (std::size_t l = 0; l < c.layers; ++l) {
            const auto& a = tape.value(trace.layer_out[l]);
            const auto& g = tape.value(trace.gcn[l]);
            for (std::size_t i = 0; i < a.size(); ++i)
                if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(g[i])) ok = false;
            ++layers_checked;
        }
    }
    return {ok, std::to_string(layers_checked) + " layers compared bitwise"};
}

Outcome permutation_equivariance() {
    std::mt19937_64 rng(91);
    const std::size_t n = 12;
    const auto adj = random_adjacency(n, rng);
    auto p = gcrl::GcrlParams::initialize(config(n, 11, 16, 3), gcrl::propagation_matrix(adj, n), 92);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (std::size_t i = 0; i < n; ++i) {
        p.feature_mean[i] = u(rng) * 10;
        p.feature_std[i] = u(rng);
    }
    const auto x = gaussian(n, 11, rng);
    const auto base = gcrl::forward_logits(gcrl::standardize(x, p), p);
    double worst = 0.0;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(perm.begin(), perm.end(), rng);
        auto q = p;
        std::vector<int> padj(n * n);
        Matrix px(n, 11);
        for (std::size_t i = 0; i < n; ++i) {
            q.feature_mean[i] = p.feature_mean[perm[i]];
            q.feature_std[i] = p.feature_std[perm[i]];
            for (std::size_t j = 0; j < n; ++j) padj[i * n + j] = adj[perm[i] * n + perm[j]];
            for (std::size_t t = 0; t < 11; ++t) px(i, t) = x(perm[i], t);
        }
        q.propagation = gcrl::propagation_matrix(padj, n);
        const auto logits = gcrl::forward_logits(gcrl::standardize(px, q), q);
        for (std::size_t k = 0; k < logits.size(); ++k) worst = std::max(worst, std::abs(logits[k] - base[k]));
    }
    return {worst < 1e-9, "20 permutations, max |logit difference| " + fmt(worst, 3)};
}

// ---- 5: Spearman ---------------------------------------------------------------

std::vector<double> count_ranks(const std::vector<double>& x) {
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double less = 0, equal = 0;
        for (double v : x) {
            less += v < x[i];
            equal += v == x[i];
        }
        r[i] = 1.0 + less + (equal - 1.0) / 2.0;
    }
    return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

Outcome spearman_oracle() {
    std::mt19937_64 rng(51);
    std::uniform_int_distribution<int> small(0, 7);
    std::normal_distribution<double> n01;
    double worst_ties = 0.0, worst_formula = 0.0;
    std::size_t tie_free = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> a(20), b(20);
        const bool ties = trial % 2 == 0;
        for (std::size_t i = 0; i < 20; ++i) {
            a[i] = ties ? small(rng) : n01(rng);
            b[i] = ties ? small(rng) + (i % 3 == 0 ? a[i] : 0.0) : 0.5 * a[i] + n01(rng);
        }
        const auto r = graph::spearman_rho(a, b);
        const auto ra = count_ranks(a), rb = count_ranks(b);
        if (!r.degenerate) worst_ties = std::max(worst_ties, std::abs(r.rho - pearson(ra, rb)));
        if (std::set<double>(a.begin(), a.end()).size() == 20 && std::set<double>(b.begin(), b.end()).size() == 20) {
            double d2 = 0;
            for (std::size_t i = 0; i < 20; ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
            worst_formula = std::max(worst_formula, std::abs(r.rho - (1.0 - 6.0 * d2 / (20.0 * 399.0))));
            ++tie_free;
        }
    }
    return {worst_ties <= 1e-12 && worst_formula <= 1e-12 && tie_free > 0,
            "1000 pairs: max |rho - rank Pearson| " + fmt(worst_ties, 3) + ", " + std::to_string(tie_free) +
                " tie-free max |rho - squared-difference formula| " + fmt(worst_formula, 3)};
}

// ---- 6: Box-Cox ------------------------------------------------------------------

double profile_llf(const std::vector<double>& y, double lambda) {
    const double n = static_cast<double>(y.size());
    double log_sum = 0.0, mean = 0.0;
    std::vector<double> z;
    for (double v : y) {
        log_sum += std::log(v);
        z.push_back(lambda == 0.0 ? std::log(v) : (std::pow(v, lambda) - 1.0) / lambda);
    }
    for (double v : z) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : z) ss += (v - mean) * (v - mean);
    return -0.5 * n * std::log(ss / n) + (lambda - 1.0) * log_sum;
}

// The lambda clause is checked on the mean over the 50 fits: a single n=500 fit
// has a sampling spread of about 0.037 around 0, so individual fits land
// outside 0.05 even for an exact maximiser.
Outcome boxcox_oracle() {
    std::mt19937_64 rng(61);
    double worst_gap = -INFINITY, worst_lambda = 0.0, mean_lambda = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        std::normal_distribution<double> d(std::uniform_real_distribution<double>(-1.0, 3.0)(rng), 1.0);
        std::vector<double> y(500);
        for (auto& v : y) v = std::exp(d(rng));
        const auto p = preprocess::fit_lambda(y);
        double grid_best = -INFINITY;
        for (int k = -5000; k <= 5000; ++k) grid_best = std::max(grid_best, profile_llf(y, k * 1e-3));
        worst_gap = std::max(worst_gap, grid_best - profile_llf(y, p.lambda));
        worst_lambda = std::max(worst_lambda, std::abs(p.lambda));
        mean_lambda += p.lambda / 50.0;
    }
    return {worst_gap <= 1e-6 && std::abs(mean_lambda) <= 0.05,
            "50 samples: max (grid - fitted) log-likelihood " + fmt(worst_gap, 3) + ", mean lambda " +
                fmt(mean_lambda, 3) + " (largest single |lambda| " + fmt(worst_lambda, 3) + ")"};
}

// ---- 7, 8: synthetic pipeline -------------------------------------------------------

RunConfig desk_config() {
    return parse_run_config(nlohmann::json::parse(R"({"seed": 1, "data": {"synthetic": "default"},
                                                      "gcrl": {"hidden": 8}})"));
}

Outcome vote_monotonicity() {
    const auto cfg = desk_config();
    const auto split = load_data(cfg);
    const auto models = fit_edges(cfg, split);
    const auto pass = harness::run_edges(split.test, models, split.n_sensors());
    const harness::CloudClassifier none = [](const Matrix&) { return gcrl::Prediction{1, 1.0}; };
    std::size_t prev_k = SIZE_MAX;
    std::int64_t prev_rtl = INT64_MIN;
    bool ok = true;
    std::ostringstream d;
    d << "k_times by e:";
    for (long e = 0; e <= static_cast<long>(split.n_sensors()); ++e) {
        const auto m = harness::evaluate_pass(pass, models, e, none, 2).metrics.edge;
        if (m.k_times > prev_k || m.rtl < prev_rtl) ok = false;
        prev_k = m.k_times;
        prev_rtl = m.rtl;
        d << ' ' << m.k_times;
    }
    return {ok, d.str()};
}

Outcome desk_end_to_end() {
    const auto cfg = desk_config();
    const auto& spec = cfg.data.synthetic;
    std::set<int> types;
    std::size_t fewest_sensors = SIZE_MAX;
    double weakest = INFINITY;
    for (const auto& w : spec.attack_windows) {
        types.insert(w.attack_type);
        fewest_sensors = std::min(fewest_sensors, w.sensors.size());
        weakest = std::min(weakest, w.magnitude);
    }
    const auto split = load_data(cfg);
    const auto models = fit_edges(cfg, split);
    const long e = resolve_sensitivity(cfg, split, models);
    const auto g = build_graph(cfg, split);
    const auto params = train_cloud(cfg, split, g);
    const auto r = harness::run_pipeline(split, models, params, e);
    const auto& fin = r.metrics.final;
    const double half = 0.5 * static_cast<double>(split.test.size() * split.n_sensors());
    const bool scenario = spec.n_sensors == 12 && spec.n_edges == 3 && spec.duration == 20000 && types.size() == 6 &&
                          weakest >= 6.0 && static_cast<long>(fewest_sensors) >= e + 1;
    const bool ok = scenario && r.metrics.edge.fnr && *r.metrics.edge.fnr == 0.0 && fin.recall &&
                    *fin.recall >= 0.90 && fin.precision && *fin.precision >= 0.90 &&
                    static_cast<double>(r.metrics.edge.rtl) > half;
    std::ostringstream d;
    d << "e=" << e << " edge FNR=" << (r.metrics.edge.fnr ? fmt(*r.metrics.edge.fnr) : "n/a")
      << " precision=" << (fin.precision ? fmt(*fin.precision, 4) : "n/a")
      << " recall=" << (fin.recall ? fmt(*fin.recall, 4) : "n/a") << " RTL=" << r.metrics.edge.rtl << " (> "
      << fmt(half, 8) << ")" << (scenario ? "" : " scenario mismatch");
    return {ok, d.str()};
}

// ---- 10: determinism through the CLI ----------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Outcome determinism() {
    const auto root = fs::temp_directory_path() / "cloudedge_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    for (const char* run : {"a", "b"}) {
        const std::string cmd = std::string("\"") + CLOUDEDGE_CLI + "\" simulate --seed 7 --hidden 8 -o \"" +
                                (root / run).string() + "\" > \"" + (root / run).string() + ".log\" 2>&1";
        const int status = std::system(cmd.c_str());
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, std::string("simulate run ") + run + " failed"};
    }
    bool ok = true;
    for (const char* f : {"metrics.json", "events.jsonl", "uploads.bin", "metrics.csv"}) {
        const auto a = slurp(root / "a" / f), b = slurp(root / "b" / f);
        if (a.empty() || a != b) ok = false;
    }
    return {ok, "metrics.json, events.jsonl, uploads.bin, metrics.csv compared byte for byte"};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "table arithmetic", 1, table_arithmetic},
        {2, "FNR arithmetic", 1, fnr_arithmetic},
        {3, "gradient correctness", 30, gradient_check},
        {4, "residual identity with zero LSTM", 1, residual_identity},
        {5, "Spearman oracle equivalence", 10, spearman_oracle},
        {6, "Box-Cox oracle", 30, boxcox_oracle},
        {7, "vote monotonicity", 60, vote_monotonicity},
        {8, "desk-scale end to end", 300, desk_end_to_end},
        {9, "permutation equivariance", 10, permutation_equivariance},
        {10, "determinism", 300, determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.budget_s;
        const bool pass = o.pass && in_time;
        failures += !pass;
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail << " ["
                  << fmt(secs, 3) << " s, budget " << c.budget_s << " s" << (in_time ? "" : ", over budget") << "]"
                  << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
