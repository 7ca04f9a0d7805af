// Command-line driver: simulate datasets, fit covariance parameters, run
// scaling benchmarks, accuracy reports against dense references, and the 1D
// nonstationary demo. All artifacts are CSV/JSON with 17-significant-digit
// numerics; runs are deterministic given (config, seed).

#include <omp.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "hodlrgp/io.hpp"
#include "hodlrgp/models/experiment.hpp"
#include "hodlrgp/models/nonstationary1d.hpp"
#include "hodlrgp/models/simulate.hpp"
#include "hodlrgp/product_rep.hpp"
#include "hodlrgp/sketch.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace hodlrgp;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GuardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T require(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <typename T>
T fallback(const json& j, const std::string& where, const char* key, T def) {
    if (!j.contains(key)) return def;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

Eigen::VectorXd vector_from(const json& j, const std::string& where, const char* key) {
    auto v = require<std::vector<double>>(j, where, key);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

// ---- model plumbing ------------------------------------------------------

struct ModelConfig {
    std::string name;  // "wind" | "adr"
    Index n = 0;
    int mesh_n = 48;
    int adr_mesh_n = 40;
    Eigen::VectorXd theta;  // empty unless given
    double noise_fraction = 0.1;
    double sigma_n = -1;  // < 0: derived from simulation
    std::uint64_t point_seed = 0;
    int coarsen = 1;
    int random_half = 0;
};

ModelConfig parse_model(const json& cfg) {
    const json& m = cfg.at("model");
    check_keys(m, "model",
               {"name", "n", "mesh_n", "adr_mesh_n", "theta", "noise_fraction", "sigma_n",
                "point_seed", "coarsen", "random_half"});
    ModelConfig mc;
    mc.name = require<std::string>(m, "model", "name");
    if (mc.name != "wind" && mc.name != "adr")
        throw ConfigError("model.name must be 'wind' or 'adr'");
    mc.n = require<Index>(m, "model", "n");
    if (mc.n < 4) throw ConfigError("model.n too small");
    mc.mesh_n = fallback<int>(m, "model", "mesh_n", mc.name == "wind" ? 48 : 60);
    mc.adr_mesh_n = fallback<int>(m, "model", "adr_mesh_n", 40);
    if (m.contains("theta")) mc.theta = vector_from(m, "model", "theta");
    mc.noise_fraction =
        fallback<double>(m, "model", "noise_fraction", mc.name == "wind" ? 0.1 : 0.2);
    mc.sigma_n = fallback<double>(m, "model", "sigma_n", -1.0);
    mc.point_seed = fallback<std::uint64_t>(m, "model", "point_seed", 20240u);
    mc.coarsen = fallback<int>(m, "model", "coarsen", 1);
    mc.random_half = fallback<int>(m, "model", "random_half", 0);
    return mc;
}

// Observation sites for a model config: the smallest nesting power-of-two
// grid covering n points, optionally coarsened by a power of two (exact grid
// subset) and/or randomly halved.
Eigen::MatrixXd resolve_points(const ModelConfig& mc) {
    Index n = mc.n;
    Index g = 1;
    while (g * g < n) g *= 2;
    Eigen::MatrixXd pts;
    if (mc.coarsen > 1) {
        if (g * g != n)
            throw ConfigError("model.coarsen requires n to be a full power-of-two grid");
        if (mc.coarsen % 2 != 0 || g % mc.coarsen != 0)
            throw ConfigError("model.coarsen must be a power of two dividing the grid");
        int c = mc.coarsen;
        while (c > 1) {
            if (c % 2 != 0) throw ConfigError("model.coarsen must be a power of two");
            c /= 2;
        }
        pts = regular_grid(g / mc.coarsen, -5.0, 5.0);
    } else {
        pts = observation_points(n, -5.0, 5.0, mc.point_seed);
    }
    for (int h = 0; h < mc.random_half; ++h) {
        if (pts.rows() % 2 != 0) throw ConfigError("model.random_half: odd point count");
        pts = thin_points(pts, pts.rows() / 2, mc.point_seed + 1 + static_cast<std::uint64_t>(h));
    }
    return pts;
}

// One of the two PDE-based experiments behind a uniform interface.
struct Model {
    std::string name;
    std::unique_ptr<WindExperiment> wind;
    std::unique_ptr<AdrExperiment> adr;

    CovarianceOracle& oracle() {
        return wind ? static_cast<CovarianceOracle&>(wind->oracle())
                    : static_cast<CovarianceOracle&>(adr->oracle());
    }
    Index dim() { return oracle().dim(); }
    const Eigen::MatrixXd& obs() const { return wind ? wind->obs() : adr->obs(); }
    Eigen::VectorXd mean() {
        if (adr) return adr->mean();
        return Eigen::VectorXd();
    }
    SimulatedData simulate(const Eigen::VectorXd& theta, double frac, std::uint64_t seed) {
        return wind ? wind->simulate(theta, frac, seed) : adr->simulate(theta, frac, seed);
    }
    ExperimentOrdering ordering(Index leaf_min, Index leaf_max) const {
        return wind ? wind->ordering(leaf_min, leaf_max) : adr->ordering(leaf_min, leaf_max);
    }
    std::vector<ParamTransform> transforms() const {
        return name == "wind" ? WindExperiment::transforms() : AdrExperiment::transforms();
    }
    std::vector<std::string> param_names() const {
        return name == "wind" ? WindExperiment::param_names() : AdrExperiment::param_names();
    }
    void set_sigma_n(double s) {
        if (wind) wind->oracle().set_sigma_n(s);
        if (adr) adr->oracle().set_sigma_n(s);
    }
};

Model build_model(const ModelConfig& mc, Eigen::MatrixXd obs) {
    Model m;
    m.name = mc.name;
    if (mc.name == "wind")
        m.wind = std::make_unique<WindExperiment>(std::move(obs), mc.mesh_n);
    else
        m.adr = std::make_unique<AdrExperiment>(std::move(obs), mc.mesh_n, mc.adr_mesh_n);
    if (mc.sigma_n >= 0) m.set_sigma_n(mc.sigma_n);
    return m;
}

struct HodlrConfig {
    Index rank = 0;
    Index leaf_min = 0;
    Index leaf_max = 0;
    std::uint64_t sketch_seed = 0;
};

HodlrConfig parse_hodlr(const json& cfg) {
    const json& h = cfg.at("hodlr");
    check_keys(h, "hodlr", {"rank", "leaf_min", "leaf_max", "sketch_seed"});
    HodlrConfig hc;
    hc.rank = require<Index>(h, "hodlr", "rank");
    if (hc.rank < 1) throw ConfigError("hodlr.rank must be positive");
    hc.leaf_min = fallback<Index>(h, "hodlr", "leaf_min", std::max<Index>(hc.rank, 32));
    hc.leaf_max = fallback<Index>(h, "hodlr", "leaf_max", 2 * hc.leaf_min);
    if (hc.leaf_min < hc.rank)
        throw ConfigError("hodlr.leaf_min must be at least hodlr.rank");
    if (hc.leaf_max < 2 * hc.leaf_min)
        throw ConfigError("hodlr.leaf_max must be at least 2 * leaf_min");
    hc.sketch_seed = fallback<std::uint64_t>(h, "hodlr", "sketch_seed", 7u);
    return hc;
}

Dataset dataset_from(const Model& m, const Eigen::VectorXd& y_base) {
    Dataset ds;
    ds.coords = m.obs();
    const Index n = ds.coords.rows();
    if (m.name == "wind") {
        ds.value_names = {"u", "v"};
        ds.values.resize(n, 2);
        ds.values.col(0) = y_base.head(n);
        ds.values.col(1) = y_base.tail(n);
    } else {
        ds.value_names = {"y"};
        ds.values = y_base;
    }
    return ds;
}

Eigen::VectorXd values_to_base(const std::string& name, const Dataset& ds) {
    if (name == "wind") {
        if (ds.value_names != std::vector<std::string>{"u", "v"})
            throw ConfigError("wind dataset must have value columns u,v");
        Eigen::VectorXd y(2 * ds.coords.rows());
        y.head(ds.coords.rows()) = ds.values.col(0);
        y.tail(ds.coords.rows()) = ds.values.col(1);
        return y;
    }
    if (ds.value_names != std::vector<std::string>{"y"})
        throw ConfigError("adr dataset must have value column y");
    return ds.values.col(0);
}

// ---- commands ------------------------------------------------------------

int cmd_simulate(const json& cfg, const fs::path& out, std::uint64_t seed) {
    check_keys(cfg, "config", {"model", "seed"});
    ModelConfig mc = parse_model(cfg);
    if (mc.theta.size() == 0) throw ConfigError("simulate: model.theta is required");
    Eigen::MatrixXd pts = resolve_points(mc);
    Model m = build_model(mc, pts);
    if (m.dim() > (Index{1} << 14)) throw GuardError("simulate: n exceeds sampler guard");

    SimulatedData sim = m.simulate(mc.theta, mc.noise_fraction, seed);
    fs::create_directories(out);
    write_dataset_csv((out / "dataset.csv").string(), dataset_from(m, sim.y));

    json meta;
    meta["model"] = mc.name;
    meta["n"] = pts.rows();
    meta["seed"] = seed;
    meta["sigma_n"] = fmt17(sim.sigma_n);
    meta["noise_fraction"] = fmt17(mc.noise_fraction);
    meta["theta_true"] = json::array();
    for (Index i = 0; i < mc.theta.size(); ++i) meta["theta_true"].push_back(fmt17(mc.theta[i]));
    std::ofstream mo(out / "meta.json");
    mo << meta.dump(2) << "\n";
    return 0;
}

int cmd_fit(const json& cfg, const fs::path& out, std::uint64_t seed) {
    check_keys(cfg, "config", {"model", "data", "hodlr", "fit", "seed"});
    ModelConfig mc = parse_model(cfg);
    HodlrConfig hc = parse_hodlr(cfg);
    const json& f = cfg.at("fit");
    check_keys(f, "fit", {"theta0", "rel_tol", "max_iter", "dense"});
    Eigen::VectorXd theta0 = vector_from(f, "fit", "theta0");
    FitOptions opts;
    opts.rel_tol = fallback<double>(f, "fit", "rel_tol", 1e-6);
    opts.max_iter = fallback<int>(f, "fit", "max_iter", 100);
    opts.dense = fallback<bool>(f, "fit", "dense", false);

    Dataset ds;
    try {
        ds = read_dataset_csv(require<std::string>(cfg, "config", "data"));
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (mc.sigma_n < 0) throw ConfigError("fit: model.sigma_n is required");
    Model m = build_model(mc, ds.coords);
    Eigen::VectorXd y_base = values_to_base(mc.name, ds);
    if (theta0.size() != m.oracle().num_params())
        throw ConfigError("fit.theta0 has the wrong length for the model");

    ExperimentOrdering ord = m.ordering(hc.leaf_min, hc.leaf_max);
    PermutedOracle oracle(m.oracle(), ord.to_base);
    Eigen::VectorXd y = oracle.gather(y_base);
    Eigen::VectorXd ybar = m.mean();
    if (ybar.size() != 0) ybar = oracle.gather(ybar);

    GpProblem prob{oracle,         ord.tree, hc.rank, hc.sketch_seed, std::move(y),
                   std::move(ybar), m.transforms()};
    (void)seed;  // fit is deterministic given (data, sketch_seed)
    FitReport report = fit_mle(prob, theta0, opts);

    fs::create_directories(out);
    auto names = m.param_names();
    write_fit_report_json((out / "report.json").string(), report, names);
    write_iterations_csv((out / "iterations.csv").string(), report, names);
    write_ci_csv((out / "ci.csv").string(), report, names);
    return report.converged ? 0 : 4;
}

int cmd_accuracy(const json& cfg, const fs::path& out, std::uint64_t seed) {
    check_keys(cfg, "config", {"model", "hodlr", "accuracy", "seed"});
    ModelConfig mc = parse_model(cfg);
    HodlrConfig hc = parse_hodlr(cfg);
    const json& a = cfg.at("accuracy");
    check_keys(a, "accuracy", {"seeds", "theta"});
    int seeds = fallback<int>(a, "accuracy", "seeds", 5);
    Eigen::VectorXd theta = vector_from(a, "accuracy", "theta");
    if (mc.theta.size() == 0) throw ConfigError("accuracy: model.theta (true value) required");

    Eigen::MatrixXd pts = resolve_points(mc);
    Model m = build_model(mc, pts);
    if (m.dim() > (Index{1} << 13)) throw GuardError("accuracy: n exceeds dense-oracle guard");

    ExperimentOrdering ord = m.ordering(hc.leaf_min, hc.leaf_max);
    fs::create_directories(out);
    std::ofstream csv(out / "accuracy.csv");
    csv << "seed,log10_eps_L,log10_eps_S,log10_eps_I,eta_g,eta_I\n";
    double sl = 0, ss = 0, si = 0, sg = 0, sI = 0;
    for (int s = 0; s < seeds; ++s) {
        SimulatedData sim = m.simulate(mc.theta, mc.noise_fraction, seed + std::uint64_t(s));
        m.oracle().set_parameters(theta);
        Eigen::VectorXd ybar = m.mean();
        DenseExact exact = dense_exact(m.oracle(), sim.y, ybar);

        PermutedOracle oracle(m.oracle(), ord.to_base);
        Eigen::VectorXd y = oracle.gather(sim.y);
        Eigen::VectorXd ybar_p = ybar.size() ? oracle.gather(ybar) : ybar;
        SketchPlan plan(ord.tree, hc.rank, hc.sketch_seed);
        BuildResult built = build_hodlr_with_derivatives(oracle, ord.tree, hc.rank, plan);
        HodlrFactorization fac = factorize(built.h, Orientation::Left);
        double lt = log_likelihood(fac, y, ybar_p);
        Eigen::VectorXd st = score(fac, built.deriv, y, ybar_p);
        Eigen::MatrixXd it = fisher_information(fac, built.deriv);

        AccuracyMetrics mets =
            accuracy_metrics(exact.loglik, exact.score, exact.fisher, lt, st, it);
        double l10L = std::log10(mets.eps_L), l10S = std::log10(mets.eps_S),
               l10I = std::log10(mets.eps_I);
        csv << s << "," << fmt17(l10L) << "," << fmt17(l10S) << "," << fmt17(l10I) << ","
            << fmt17(mets.eta_g) << "," << fmt17(mets.eta_I) << "\n";
        sl += l10L;
        ss += l10S;
        si += l10I;
        sg += mets.eta_g;
        sI += mets.eta_I;
    }
    const double d = double(seeds);
    csv << "mean," << fmt17(sl / d) << "," << fmt17(ss / d) << "," << fmt17(si / d) << ","
        << fmt17(sg / d) << "," << fmt17(sI / d) << "\n";
    return 0;
}

int cmd_bench(const json& cfg, const fs::path& out, std::uint64_t seed) {
    check_keys(cfg, "config", {"model", "hodlr", "bench", "seed"});
    ModelConfig mc = parse_model(cfg);
    HodlrConfig hc = parse_hodlr(cfg);
    const json& b = cfg.at("bench");
    check_keys(b, "bench", {"sizes", "repeats"});
    auto sizes = require<std::vector<Index>>(b, "bench", "sizes");
    int repeats = fallback<int>(b, "bench", "repeats", 3);
    if (sizes.empty()) throw ConfigError("bench.sizes must be non-empty");
    if (mc.theta.size() == 0) throw ConfigError("bench: model.theta required");

    fs::create_directories(out);
    std::ofstream csv(out / "bench.csv");
    csv << "n,k,metric,value,repeat\n";
    auto row = [&](Index n, const char* metric, double value, int rep) {
        csv << n << "," << hc.rank << "," << metric << "," << fmt17(value) << "," << rep << "\n";
    };

    for (Index n : sizes) {
        ModelConfig cell = mc;
        cell.n = n;
        Eigen::MatrixXd pts = resolve_points(cell);
        Model m = build_model(cell, pts);
        if (m.dim() > (Index{1} << 16)) throw GuardError("bench: size exceeds memory guard");
        ExperimentOrdering ord = m.ordering(hc.leaf_min, hc.leaf_max);
        SketchPlan plan(ord.tree, hc.rank, hc.sketch_seed);
        const int tau = ord.tree.depth();

        for (int rep = 0; rep < repeats; ++rep) {
            SimulatedData sim =
                m.simulate(cell.theta, cell.noise_fraction, seed + std::uint64_t(rep));
            PermutedOracle oracle(m.oracle(), ord.to_base);
            Eigen::VectorXd y = oracle.gather(sim.y);
            Eigen::VectorXd ybar = m.mean();
            if (ybar.size()) ybar = oracle.gather(ybar);

            oracle.reset_counters();
            double t0 = now_seconds();
            HodlrMatrix h = build_hodlr(oracle, ord.tree, hc.rank, plan);
            double t1 = now_seconds();
            row(n, "build_seconds", t1 - t0, rep);
            row(n, "build_apply_columns", double(oracle.apply_columns()), rep);
            row(n, "build_apply_columns_expected",
                double(2 * hc.rank * tau + ord.tree.max_leaf_size()), rep);

            oracle.reset_counters();
            t0 = now_seconds();
            BuildResult built = build_hodlr_with_derivatives(oracle, ord.tree, hc.rank, plan);
            t1 = now_seconds();
            row(n, "build_deriv_seconds", t1 - t0, rep);
            row(n, "deriv_apply_columns", double(oracle.apply_columns()), rep);
            row(n, "deriv_derivative_columns", double(oracle.derivative_columns()), rep);

            t0 = now_seconds();
            HodlrFactorization fac = factorize(built.h, Orientation::Left);
            t1 = now_seconds();
            row(n, "factorize_seconds", t1 - t0, rep);

            t0 = now_seconds();
            double ll = log_likelihood(fac, y, ybar);
            t1 = now_seconds();
            row(n, "loglik_seconds", t1 - t0, rep);
            (void)ll;
            t0 = now_seconds();
            Eigen::VectorXd sc = score(fac, built.deriv, y, ybar);
            t1 = now_seconds();
            row(n, "score_seconds", t1 - t0, rep);
            (void)sc;
            t0 = now_seconds();
            Eigen::MatrixXd fi = fisher_information(fac, built.deriv);
            t1 = now_seconds();
            row(n, "fisher_seconds", t1 - t0, rep);
            (void)fi;

            // OpenMP-parallel kernels vs the same kernels pinned to one
            // thread: one full likelihood/score/Fisher evaluation each.
            auto evaluate = [&]() {
                HodlrMatrix h2 = h;
                HodlrFactorization f2 = factorize(h2, Orientation::Left);
                double v = log_likelihood(f2, y, ybar);
                Eigen::VectorXd s2 = score(f2, built.deriv, y, ybar);
                Eigen::MatrixXd i2 = fisher_information(f2, built.deriv);
                return v + s2.sum() + i2.sum();
            };
            int max_threads = omp_get_max_threads();
            t0 = now_seconds();
            volatile double sink = evaluate();
            t1 = now_seconds();
            row(n, "eval_seconds_parallel", t1 - t0, rep);
            omp_set_num_threads(1);
            t0 = now_seconds();
            sink = evaluate();
            t1 = now_seconds();
            omp_set_num_threads(max_threads);
            row(n, "eval_seconds_serial", t1 - t0, rep);
            (void)sink;
        }
    }
    return 0;
}

int cmd_demo1d(const json& cfg, const fs::path& out, std::uint64_t seed) {
    check_keys(cfg, "config", {"demo1d", "seed"});
    json d = cfg.contains("demo1d") ? cfg.at("demo1d") : json::object();
    check_keys(d, "demo1d", {"seeds", "theta_true", "theta0", "sigma", "max_iter"});
    int seeds = fallback<int>(d, "demo1d", "seeds", 20);
    double sigma = fallback<double>(d, "demo1d", "sigma", 1.0);
    Eigen::VectorXd theta_true(2), theta0(2);
    theta_true << 0.1, 0.6;
    theta0 << 0.2, 0.2;
    if (d.contains("theta_true")) theta_true = vector_from(d, "demo1d", "theta_true");
    if (d.contains("theta0")) theta0 = vector_from(d, "demo1d", "theta0");
    int max_iter = fallback<int>(d, "demo1d", "max_iter", 200);

    // Full grid: 201 points on [0, 10] (dx = 0.05); subsampled: every 4th
    // point (dx = 0.2); truncated: full resolution on [0, 2.5].
    const Index nfull = 201;
    Eigen::VectorXd xfull(nfull);
    for (Index i = 0; i < nfull; ++i) xfull[i] = 10.0 * double(i) / double(nfull - 1);
    struct Setting {
        std::string name;
        std::vector<Index> idx;
    };
    std::vector<Setting> settings(3);
    settings[0].name = "full";
    settings[1].name = "subsampled";
    settings[2].name = "truncated";
    for (Index i = 0; i < nfull; ++i) {
        settings[0].idx.push_back(i);
        if (i % 4 == 0) settings[1].idx.push_back(i);
        if (i <= 50) settings[2].idx.push_back(i);
    }

    Nonstationary1dOracle truth(xfull, sigma);
    truth.set_parameters(theta_true);

    fs::create_directories(out);
    std::ofstream csv(out / "demo1d.csv");
    csv << "setting,seed,a_hat,b_hat,a_lo,a_hi,b_lo,b_hi,a_width,b_width,converged\n";
    for (int s = 0; s < seeds; ++s) {
        Eigen::VectorXd yfull =
            sample_gaussian_dense(truth.dense(), Eigen::VectorXd(), seed + std::uint64_t(s));
        for (const auto& st : settings) {
            const Index n = static_cast<Index>(st.idx.size());
            Eigen::VectorXd x(n), y(n);
            for (Index i = 0; i < n; ++i) {
                x[i] = xfull[st.idx[static_cast<std::size_t>(i)]];
                y[i] = yfull[st.idx[static_cast<std::size_t>(i)]];
            }
            Nonstationary1dOracle oracle(x, sigma);
            GpProblem prob{oracle,
                           ClusterTree(n, 0),
                           0,
                           0,
                           y,
                           Eigen::VectorXd(),
                           {ParamTransform::Positive, ParamTransform::Positive}};
            FitOptions opts;
            opts.dense = true;
            opts.max_iter = max_iter;
            FitReport rep = fit_mle(prob, theta0, opts);
            auto ci = [&](Index i, Index j) {
                return (rep.ci_valid && rep.ci.rows() == 2)
                           ? rep.ci(i, j)
                           : std::numeric_limits<double>::quiet_NaN();
            };
            double aw = ci(0, 1) - ci(0, 0);
            double bw = ci(1, 1) - ci(1, 0);
            csv << st.name << "," << s << "," << fmt17(rep.theta_hat[0]) << ","
                << fmt17(rep.theta_hat[1]) << "," << fmt17(ci(0, 0)) << ","
                << fmt17(ci(0, 1)) << "," << fmt17(ci(1, 0)) << ","
                << fmt17(ci(1, 1)) << "," << fmt17(aw) << "," << fmt17(bw) << ","
                << (rep.converged ? 1 : 0) << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* t = std::getenv("HODLRGP_THREADS")) {
        int nt = std::atoi(t);
        if (nt > 0) omp_set_num_threads(nt);
    }

    CLI::App app{"HODLR Gaussian-process toolkit"};
    app.require_subcommand(1);
    std::string config_path, out_dir = "out";
    std::optional<std::uint64_t> seed_flag;
    for (const char* name : {"simulate", "fit", "bench", "accuracy", "demo1d"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path)->required();
        sub->add_option("--out", out_dir);
        sub->add_option("--seed", seed_flag);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    try {
        json cfg = load_config(config_path);
        std::uint64_t seed = 1;
        if (cfg.is_object() && cfg.contains("seed")) seed = cfg.at("seed").get<std::uint64_t>();
        if (seed_flag) seed = *seed_flag;
        fs::path out(out_dir);
        if (cmd == "simulate") return cmd_simulate(cfg, out, seed);
        if (cmd == "fit") return cmd_fit(cfg, out, seed);
        if (cmd == "bench") return cmd_bench(cfg, out, seed);
        if (cmd == "accuracy") return cmd_accuracy(cfg, out, seed);
        if (cmd == "demo1d") return cmd_demo1d(cfg, out, seed);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const GuardError& e) {
        std::cerr << "resource guard: " << e.what() << "\n";
        return 3;
    } catch (const std::length_error& e) {
        std::cerr << "resource guard: " << e.what() << "\n";
        return 3;
    } catch (const NotPositiveDefinite& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    }
}
