#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clab/core.hpp"
#include "clab/dataset.hpp"
#include "clab/em.hpp"
#include "clab/kmeans.hpp"
#include "clab/kstar.hpp"
#include "clab/metrics.hpp"
#include "clab/rng.hpp"

namespace clab {

enum class Algorithm { kmeans, kstar, em };
enum class OutputFormat { json, csv };

inline const char* to_string(Algorithm a)
{
    switch (a) {
    case Algorithm::kmeans: return "kmeans";
    case Algorithm::kstar: return "kstar";
    case Algorithm::em: return "em";
    }
    return "?";
}

inline Algorithm parse_algorithm(const std::string& s)
{
    if (s == "kmeans") return Algorithm::kmeans;
    if (s == "kstar") return Algorithm::kstar;
    if (s == "em") return Algorithm::em;
    throw ConfigError("unknown algorithm '" + s + "' (expected kmeans, kstar or em)");
}

inline const char* to_string(MStepVariant v) { return v == MStepVariant::standard ? "standard" : "paper_literal"; }

struct RunConfig {
    std::filesystem::path dataset_path;
    std::optional<std::size_t> class_col;  // last column when unset and labels is true
    bool labels = true;
    HeaderMode header = HeaderMode::auto_detect;
    std::vector<Algorithm> algorithms{Algorithm::kmeans, Algorithm::kstar, Algorithm::em};
    std::size_t k = 5;
    std::uint64_t seed = 1;
    std::size_t restarts = 5;
    double eta = 0.05;
    Sigma2Mode sigma2_mode = Sigma2Mode::data_variance;
    double sigma2 = 1.0;
    MStepVariant em_variant = MStepVariant::standard;
    std::size_t max_iters = 300;
    std::size_t max_epochs = 100;
    double tol = 1e-8;
    std::filesystem::path output_dir = "out";
    OutputFormat output_format = OutputFormat::json;
    bool ones_count = false;

    void validate() const
    {
        if (k < 1) throw ConfigError("k must be at least 1");
        if (restarts < 1) throw ConfigError("restarts must be at least 1");
        if (algorithms.empty()) throw ConfigError("at least one algorithm is required");
        for (std::size_t i = 0; i < algorithms.size(); ++i)
            for (std::size_t j = i + 1; j < algorithms.size(); ++j)
                if (algorithms[i] == algorithms[j])
                    throw ConfigError(std::string("algorithm listed twice: ") + to_string(algorithms[i]));
        if (!(eta >= 0.0 && eta < 1.0)) throw ConfigError("eta must lie in [0, 1)");
        if (sigma2_mode == Sigma2Mode::fixed && !(sigma2 > 0.0 && std::isfinite(sigma2)))
            throw ConfigError("sigma2 must be positive");
        if (max_iters < 1) throw ConfigError("max_iters must be at least 1");
        if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
        if (!(tol >= 0.0)) throw ConfigError("tol must be non-negative");
    }
};

struct AlgorithmRun {
    Algorithm algorithm = Algorithm::kmeans;
    MetricsReport metrics;
    Matrix centers;
    Assignment assignment;
    std::size_t best_restart = 0;
    std::size_t iterations = 0;
    bool converged = false;
    std::optional<double> sse;                // kmeans
    std::optional<double> log_likelihood;     // em
    std::optional<double> sigma2;             // em
    std::optional<std::size_t> surviving;     // kstar
    std::optional<double> mean_cost;          // kstar
    std::vector<double> alphas;               // kstar
    double wall_time_seconds = 0.0;
};

struct ExperimentReport {
    RunConfig config;
    std::size_t n = 0;
    std::size_t d = 0;
    std::size_t num_classes = 0;
    std::optional<double> majority_fraction;
    std::vector<AlgorithmRun> runs;
    double combined_wall_time_seconds = 0.0;
};

namespace detail {

inline std::uint64_t stream_of(Algorithm a) { return static_cast<std::uint64_t>(a) + 1; }

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline AlgorithmRun run_kmeans(const Matrix& x, const RunConfig& cfg)
{
    const RngStream base(cfg.seed, stream_of(Algorithm::kmeans));
    const KMeansOptions opt{cfg.max_iters, cfg.tol};
    AlgorithmRun run;
    std::optional<KMeansResult> best;
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        RngStream rng = base.substream(r);
        Stopwatch sw;
        auto cur = lloyd_run(x, cfg.k, rng, opt);
        run.wall_time_seconds += sw.seconds();
        if (!best || cur.model.sse < best->model.sse) {
            best = std::move(cur);
            run.best_restart = r;
        }
    }
    run.centers = best->model.centroids;
    run.assignment = best->assignment;
    run.iterations = best->model.iterations;
    run.converged = best->model.converged;
    run.sse = best->model.sse;
    return run;
}

inline AlgorithmRun run_kstar(const Matrix& x, const RunConfig& cfg)
{
    const RngStream base(cfg.seed, stream_of(Algorithm::kstar));
    const KStarOptions opt{cfg.eta, cfg.max_epochs, 1e-6};
    AlgorithmRun run;
    std::optional<KStarResult> best;
    double best_cost = 0.0;
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        RngStream rng = base.substream(r);
        Stopwatch sw;
        auto cur = kstar_run(x, cfg.k, rng, opt);
        run.wall_time_seconds += sw.seconds();
        const double cost = mean_penalized_cost(x, cur);
        const bool better = !best ||
                            (cur.model.penalized_converged && !best->model.penalized_converged) ||
                            (cur.model.penalized_converged == best->model.penalized_converged && cost < best_cost);
        if (better) {
            best = std::move(cur);
            best_cost = cost;
            run.best_restart = r;
        }
    }
    run.centers = best->model.means;
    run.assignment = best->assignment;
    run.iterations = best->model.fscl_epochs + best->model.penalized_epochs;
    run.converged = best->model.penalized_converged;
    run.surviving = best->surviving;
    run.mean_cost = best_cost;
    run.alphas = best->model.alphas;
    return run;
}

inline AlgorithmRun run_em(const Matrix& x, const RunConfig& cfg)
{
    const RngStream base(cfg.seed, stream_of(Algorithm::em));
    EmOptions opt;
    opt.sigma2_mode = cfg.sigma2_mode;
    opt.sigma2 = cfg.sigma2;
    opt.variant = cfg.em_variant;
    opt.max_iters = cfg.max_iters;
    opt.tol = cfg.tol;
    AlgorithmRun run;
    std::optional<GmmIsoModel> best;
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        RngStream rng = base.substream(r);
        Stopwatch sw;
        auto cur = em_run(x, cfg.k, rng, opt);
        run.wall_time_seconds += sw.seconds();
        if (!best || cur.loglik_trace.back() > best->loglik_trace.back()) {
            best = std::move(cur);
            run.best_restart = r;
        }
    }
    run.centers = best->means;
    run.assignment = hard_assign(*best);
    run.iterations = best->iterations;
    run.converged = best->converged;
    run.log_likelihood = best->loglik_trace.back();
    run.sigma2 = best->sigma2;
    return run;
}

}  // namespace detail

/// Runs every configured algorithm on already-normalized data.
inline ExperimentReport run_experiment(const RunConfig& cfg, const DataMatrix& data)
{
    cfg.validate();
    data.validate();
    if (cfg.k > data.n())
        throw ConfigError("k=" + std::to_string(cfg.k) + " exceeds the dataset's " + std::to_string(data.n()) + " rows");

    ExperimentReport report;
    report.config = cfg;
    report.n = data.n();
    report.d = data.d();
    report.num_classes = data.num_classes();
    if (data.labels) {
        std::vector<std::size_t> freq(data.num_classes(), 0);
        for (int c : *data.labels) ++freq[static_cast<std::size_t>(c)];
        report.majority_fraction =
            static_cast<double>(*std::max_element(freq.begin(), freq.end())) / static_cast<double>(data.n());
    }

    const Matrix& x = data.values;
    for (auto algo : cfg.algorithms) {
        AlgorithmRun run;
        try {
            switch (algo) {
            case Algorithm::kmeans: run = detail::run_kmeans(x, cfg); break;
            case Algorithm::kstar: run = detail::run_kstar(x, cfg); break;
            case Algorithm::em: run = detail::run_em(x, cfg); break;
            }
        } catch (const Error& e) {
            throw AlgorithmError(std::string(to_string(algo)) + " failed: " + e.what());
        }
        run.algorithm = algo;
        run.metrics = compute_metrics(x, data.labels, run.assignment, run.centers, cfg.ones_count);
        run.metrics.wall_time_seconds = run.wall_time_seconds;
        report.combined_wall_time_seconds += run.wall_time_seconds;
        report.runs.push_back(std::move(run));
    }
    return report;
}

/// Loads and min-max normalizes the configured dataset, then runs it.
/// The normalized table is returned through `normalized` when given.
inline ExperimentReport run_experiment(const RunConfig& cfg, DataMatrix* normalized = nullptr)
{
    cfg.validate();
    CsvOptions csv;
    csv.class_col = cfg.class_col;
    csv.labels = cfg.labels;
    csv.header = cfg.header;
    const DataMatrix data = minmax_normalize(load_csv(cfg.dataset_path, csv));
    auto report = run_experiment(cfg, data);
    if (normalized) *normalized = data;
    return report;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline nlohmann::json to_json(const Matrix& m)
{
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline nlohmann::json config_json(const RunConfig& c)
{
    nlohmann::json j;
    j["dataset_path"] = c.dataset_path.string();
    j["class_col"] = c.class_col ? nlohmann::json(*c.class_col) : nlohmann::json(nullptr);
    j["labels"] = c.labels;
    auto algos = nlohmann::json::array();
    for (auto a : c.algorithms) algos.push_back(to_string(a));
    j["algorithms"] = algos;
    j["k"] = c.k;
    j["seed"] = c.seed;
    j["restarts"] = c.restarts;
    j["eta"] = c.eta;
    j["sigma2_mode"] = c.sigma2_mode == Sigma2Mode::fixed ? "fixed" : "data_variance";
    if (c.sigma2_mode == Sigma2Mode::fixed) j["sigma2"] = c.sigma2;
    j["em_variant"] = to_string(c.em_variant);
    j["max_iters"] = c.max_iters;
    j["max_epochs"] = c.max_epochs;
    j["tol"] = c.tol;
    j["output_format"] = c.output_format == OutputFormat::json ? "json" : "csv";
    j["ones_count"] = c.ones_count;
    return j;
}

inline nlohmann::json run_json(const AlgorithmRun& r)
{
    nlohmann::json m;
    const auto& mt = r.metrics;
    if (mt.purity) m["purity"] = *mt.purity;
    if (mt.dominant_count) m["dominant_count"] = *mt.dominant_count;
    if (mt.class_entropy) m["class_entropy"] = *mt.class_entropy;
    if (mt.ones_count) m["ones_count"] = *mt.ones_count;
    m["normalized_entropy"] = mt.norm_entropy;
    m["cluster_sizes"] = mt.cluster_sizes;
    m["cluster_grand_means"] = mt.cluster_means.grand;
    m["cluster_empty"] = mt.cluster_means.empty;
    m["cluster_feature_means"] = to_json(mt.cluster_means.per_feature);
    m["intercluster_distances"] = to_json(mt.intercluster);

    nlohmann::json model;
    model["centers"] = to_json(r.centers);
    model["best_restart"] = r.best_restart;
    model["iterations"] = r.iterations;
    model["converged"] = r.converged;
    if (r.sse) model["sse"] = *r.sse;
    if (r.log_likelihood) model["log_likelihood"] = *r.log_likelihood;
    if (r.sigma2) model["sigma2"] = *r.sigma2;
    if (r.surviving) model["surviving_clusters"] = *r.surviving;
    if (r.mean_cost) model["mean_penalized_cost"] = *r.mean_cost;
    if (!r.alphas.empty()) model["alphas"] = r.alphas;

    nlohmann::json j;
    j["name"] = to_string(r.algorithm);
    j["metrics"] = std::move(m);
    j["model"] = std::move(model);
    j["wall_time_seconds"] = r.wall_time_seconds;
    return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw OutputError(path.string() + ": cannot open for writing");
    out << text;
    if (!out) throw OutputError(path.string() + ": write failed");
}

inline void ensure_dir(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw OutputError(dir.string() + ": cannot create directory");
}

// Indices of clusters ordered by ascending grand mean; empty clusters last.
inline std::vector<std::size_t> mean_rank_order(const ClusterMeans& cm)
{
    std::vector<std::size_t> order(cm.grand.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (cm.empty[a] != cm.empty[b]) return !cm.empty[a];
        return cm.grand[a] < cm.grand[b];
    });
    return order;
}

// rank,<algo...>: row r holds each algorithm's r-th smallest non-empty cluster grand mean.
inline std::string means_table(const ExperimentReport& r)
{
    std::ostringstream out;
    out << "rank";
    for (const auto& run : r.runs) out << ',' << to_string(run.algorithm);
    out << '\n';
    std::vector<std::vector<std::size_t>> orders;
    for (const auto& run : r.runs) orders.push_back(mean_rank_order(run.metrics.cluster_means));
    for (std::size_t row = 0; row < r.config.k; ++row) {
        out << row + 1;
        for (std::size_t a = 0; a < r.runs.size(); ++a) {
            const auto& cm = r.runs[a].metrics.cluster_means;
            const auto j = orders[a][row];
            out << ',';
            if (!cm.empty[j]) out << format_real(cm.grand[j]);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace detail

inline nlohmann::json report_json(const ExperimentReport& r)
{
    nlohmann::json j;
    j["config"] = detail::config_json(r.config);
    nlohmann::json ds;
    ds["n"] = r.n;
    ds["d"] = r.d;
    ds["num_classes"] = r.num_classes;
    if (r.majority_fraction) ds["majority_fraction"] = *r.majority_fraction;
    j["dataset"] = ds;
    auto runs = nlohmann::json::array();
    for (const auto& run : r.runs) runs.push_back(detail::run_json(run));
    j["algorithms"] = runs;
    j["combined_wall_time_seconds"] = r.combined_wall_time_seconds;
    return j;
}

/// Canonical text: sorted keys, two-space indent, trailing newline.
inline std::string canonical_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

/// Writes report.json, or the table files for csv:
///   report_purity_entropy.csv  metric rows x algorithm columns
///   report_times.csv           per-algorithm seconds plus the combined column
///   report_means.csv           k rows of per-cluster grand means x algorithms
///   report_sizes.csv           cluster sizes by cluster index
///   report_intercluster_<algo>.csv
/// Returns the written paths.
inline std::vector<std::filesystem::path> emit_report(const ExperimentReport& r, OutputFormat format,
                                                      const std::filesystem::path& dir)
{
    detail::ensure_dir(dir);
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::string& name, const std::string& text) {
        written.push_back(dir / name);
        detail::write_text(written.back(), text);
    };
    if (format == OutputFormat::json) {
        put("report.json", canonical_json(report_json(r)));
        return written;
    }

    std::ostringstream header;
    for (const auto& run : r.runs) header << ',' << to_string(run.algorithm);

    {
        std::ostringstream t;
        t << "metric" << header.str() << '\n';
        auto line = [&](const char* name, auto get) {
            t << name;
            for (const auto& run : r.runs) {
                t << ',';
                get(t, run);
            }
            t << '\n';
        };
        auto real = [](std::ostream& o, const std::optional<double>& v) {
            if (v) o << format_real(*v);
        };
        if (r.majority_fraction) {
            line("purity", [&](std::ostream& o, const AlgorithmRun& run) { real(o, run.metrics.purity); });
            line("dominant_count", [](std::ostream& o, const AlgorithmRun& run) { o << *run.metrics.dominant_count; });
            line("class_entropy", [&](std::ostream& o, const AlgorithmRun& run) { real(o, run.metrics.class_entropy); });
        }
        line("normalized_entropy",
             [](std::ostream& o, const AlgorithmRun& run) { o << format_real(run.metrics.norm_entropy); });
        if (r.config.ones_count && r.majority_fraction)
            line("ones_count", [](std::ostream& o, const AlgorithmRun& run) { o << *run.metrics.ones_count; });
        line("nonempty_clusters", [](std::ostream& o, const AlgorithmRun& run) {
            o << std::count_if(run.metrics.cluster_sizes.begin(), run.metrics.cluster_sizes.end(),
                               [](std::size_t s) { return s > 0; });
        });
        line("iterations", [](std::ostream& o, const AlgorithmRun& run) { o << run.iterations; });
        put("report_purity_entropy.csv", t.str());
    }
    {
        std::ostringstream t;
        t << header.str().substr(1) << ",combined\n";
        for (const auto& run : r.runs) t << format_real(run.wall_time_seconds) << ',';
        t << format_real(r.combined_wall_time_seconds) << '\n';
        put("report_times.csv", t.str());
    }
    put("report_means.csv", detail::means_table(r));
    {
        std::ostringstream t;
        t << "cluster" << header.str() << '\n';
        for (std::size_t j = 0; j < r.config.k; ++j) {
            t << j;
            for (const auto& run : r.runs) t << ',' << run.metrics.cluster_sizes[j];
            t << '\n';
        }
        put("report_sizes.csv", t.str());
    }
    for (const auto& run : r.runs) {
        std::ostringstream t;
        const auto& m = run.metrics.intercluster;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) t << (j ? "," : "") << format_real(m(i, j));
            t << '\n';
        }
        put(std::string("report_intercluster_") + to_string(run.algorithm) + ".csv", t.str());
    }
    return written;
}

/// Plot-ready text:
///   fig_means.csv                      ranked grand means per algorithm
///   fig_scatter_<algo>_cluster<j>.csv  row,position for members of cluster j (1-based)
/// where position is the row's mean over features.
inline std::vector<std::filesystem::path> emit_plot_data(const ExperimentReport& r, const DataMatrix& m,
                                                         const std::filesystem::path& dir)
{
    detail::ensure_dir(dir);
    std::vector<std::filesystem::path> written;
    written.push_back(dir / "fig_means.csv");
    detail::write_text(written.back(), detail::means_table(r));
    for (const auto& run : r.runs) {
        check_assignment(m.values, run.assignment);
        std::vector<std::ostringstream> files(run.assignment.k);
        for (auto& f : files) f << "row,position\n";
        for (Eigen::Index i = 0; i < m.values.rows(); ++i)
            files[run.assignment.index[static_cast<std::size_t>(i)]]
                << i << ',' << format_real(m.values.row(i).mean()) << '\n';
        for (std::size_t j = 0; j < files.size(); ++j) {
            written.push_back(dir / (std::string("fig_scatter_") + to_string(run.algorithm) + "_cluster" +
                                     std::to_string(j + 1) + ".csv"));
            detail::write_text(written.back(), files[j].str());
        }
    }
    return written;
}

}  // namespace clab
