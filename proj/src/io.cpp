#include "hodlrgp/io.hpp"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace hodlrgp {

static_assert(std::endian::native == std::endian::little,
              "binary sidecars are written as little-endian float64");

using nlohmann::json;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& path) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error(path + ": malformed numeric field '" + s + "'");
    }
    if (pos != s.size()) throw std::runtime_error(path + ": malformed numeric field '" + s + "'");
    return v;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

Table read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    t.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv_line(line);
        if (cells.size() != t.header.size())
            throw std::runtime_error(path + ": ragged row with " + std::to_string(cells.size()) +
                                     " fields");
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_double(c, path));
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_binary(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    // Row-major on disk.
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) {
            double v = m(i, j);
            out.write(reinterpret_cast<const char*>(&v), sizeof(double));
        }
}

Eigen::MatrixXd read_binary(const std::string& path, Index rows, Index cols) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    Eigen::MatrixXd m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) {
            double v;
            in.read(reinterpret_cast<char*>(&v), sizeof(double));
            m(i, j) = v;
        }
    if (!in) throw std::runtime_error(path + ": truncated sidecar");
    return m;
}

}  // namespace

PointSet read_points_csv(const std::string& path) {
    Table t = read_table(path);
    int d;
    if (t.header == std::vector<std::string>{"x1"})
        d = 1;
    else if (t.header == std::vector<std::string>{"x1", "x2"})
        d = 2;
    else
        throw std::runtime_error(path + ": expected header 'x1' or 'x1,x2'");
    PointSet p;
    p.coords.resize(static_cast<Index>(t.rows.size()), d);
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        for (int j = 0; j < d; ++j) p.coords(static_cast<Index>(i), j) = t.rows[i][j];
    return p;
}

void write_points_csv(const std::string& path, const PointSet& points) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << (points.dim() == 1 ? "x1" : "x1,x2") << "\n";
    for (Index i = 0; i < points.size(); ++i) {
        out << fmt17(points.coords(i, 0));
        if (points.dim() == 2) out << "," << fmt17(points.coords(i, 1));
        out << "\n";
    }
}

void write_permutation_csv(const std::string& path, const std::vector<Index>& perm) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "perm\n";
    for (Index v : perm) out << v << "\n";
}

Dataset read_dataset_csv(const std::string& path) {
    Table t = read_table(path);
    if (t.header.size() < 3 || t.header[0] != "x1" || t.header[1] != "x2")
        throw std::runtime_error(path + ": expected header 'x1,x2,<values...>'");
    Dataset ds;
    ds.value_names.assign(t.header.begin() + 2, t.header.end());
    const Index n = static_cast<Index>(t.rows.size());
    const Index nv = static_cast<Index>(ds.value_names.size());
    ds.coords.resize(n, 2);
    ds.values.resize(n, nv);
    for (Index i = 0; i < n; ++i) {
        ds.coords(i, 0) = t.rows[static_cast<std::size_t>(i)][0];
        ds.coords(i, 1) = t.rows[static_cast<std::size_t>(i)][1];
        for (Index j = 0; j < nv; ++j)
            ds.values(i, j) = t.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j) + 2];
    }
    return ds;
}

void write_dataset_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "x1,x2";
    for (const auto& nm : ds.value_names) out << "," << nm;
    out << "\n";
    for (Index i = 0; i < ds.coords.rows(); ++i) {
        out << fmt17(ds.coords(i, 0)) << "," << fmt17(ds.coords(i, 1));
        for (Index j = 0; j < ds.values.cols(); ++j) out << "," << fmt17(ds.values(i, j));
        out << "\n";
    }
}

void write_hodlr_debug(const std::string& dir, const std::string& name, const HodlrMatrix& h) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    json manifest;
    manifest["n"] = h.size();
    manifest["depth"] = h.depth();
    manifest["symmetric"] = h.symmetric();
    const ClusterTree& tree = h.tree();

    auto block_entry = [&](const LowRankBlock& b, const std::string& tag, int level,
                           Index node, bool upper) {
        const auto& kids = tree.level(level);
        auto rows = upper ? kids[2 * node] : kids[2 * node + 1];
        auto cols = upper ? kids[2 * node + 1] : kids[2 * node];
        json e;
        e["node"] = node;
        e["rows"] = {rows.lo, rows.hi};
        e["cols"] = {cols.lo, cols.hi};
        e["rank"] = b.rank();
        std::string base = name + "_" + tag + "_l" + std::to_string(level) + "_n" +
                           std::to_string(node);
        e["left"] = base + "_left.bin";
        e["right"] = base + "_right.bin";
        write_binary((fs::path(dir) / (base + "_left.bin")).string(), b.left);
        write_binary((fs::path(dir) / (base + "_right.bin")).string(), b.right);
        return e;
    };

    manifest["upper"] = json::array();
    for (int l = 1; l <= h.depth(); ++l) {
        json lev;
        lev["level"] = l;
        lev["blocks"] = json::array();
        for (Index j = 0; j < static_cast<Index>(tree.level(l - 1).size()); ++j)
            lev["blocks"].push_back(block_entry(h.upper(l, j), "u", l, j, true));
        manifest["upper"].push_back(lev);
    }
    if (!h.symmetric()) {
        manifest["lower"] = json::array();
        for (int l = 1; l <= h.depth(); ++l) {
            json lev;
            lev["level"] = l;
            lev["blocks"] = json::array();
            for (Index j = 0; j < static_cast<Index>(tree.level(l - 1).size()); ++j)
                lev["blocks"].push_back(block_entry(h.lower_block(l, j), "lo", l, j, false));
            manifest["lower"].push_back(lev);
        }
    }
    manifest["leaves"] = json::array();
    for (Index b = 0; b < h.num_leaves(); ++b) {
        auto r = tree.leaves()[b];
        json e;
        e["index"] = b;
        e["rows"] = {r.lo, r.hi};
        std::string file = name + "_leaf" + std::to_string(b) + ".bin";
        e["file"] = file;
        write_binary((fs::path(dir) / file).string(), h.leaf(b));
        manifest["leaves"].push_back(e);
    }
    std::ofstream out(fs::path(dir) / (name + ".json"));
    if (!out) throw std::runtime_error("cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

HodlrMatrix read_hodlr_debug(const std::string& dir, const std::string& name) {
    namespace fs = std::filesystem;
    std::ifstream in(fs::path(dir) / (name + ".json"));
    if (!in) throw std::runtime_error("cannot open manifest in " + dir);
    json manifest = json::parse(in);
    const Index n = manifest.at("n").get<Index>();
    const int depth = manifest.at("depth").get<int>();
    const bool symmetric = manifest.at("symmetric").get<bool>();
    ClusterTree tree(n, depth);
    HodlrMatrix h = HodlrMatrix::zero(tree, symmetric);

    auto load_block = [&](const json& e, bool upper) {
        Index rows = e.at("rows")[1].get<Index>() - e.at("rows")[0].get<Index>();
        Index cols = e.at("cols")[1].get<Index>() - e.at("cols")[0].get<Index>();
        Index rank = e.at("rank").get<Index>();
        LowRankBlock b;
        b.left = read_binary((fs::path(dir) / e.at("left").get<std::string>()).string(), rows, rank);
        b.right =
            read_binary((fs::path(dir) / e.at("right").get<std::string>()).string(), cols, rank);
        (void)upper;
        return b;
    };
    for (const auto& lev : manifest.at("upper")) {
        int l = lev.at("level").get<int>();
        for (const auto& e : lev.at("blocks"))
            h.upper(l, e.at("node").get<Index>()) = load_block(e, true);
    }
    if (!symmetric) {
        for (const auto& lev : manifest.at("lower")) {
            int l = lev.at("level").get<int>();
            for (const auto& e : lev.at("blocks"))
                h.lower(l, e.at("node").get<Index>()) = load_block(e, false);
        }
    }
    for (const auto& e : manifest.at("leaves")) {
        Index b = e.at("index").get<Index>();
        Index m = e.at("rows")[1].get<Index>() - e.at("rows")[0].get<Index>();
        h.leaf(b) = read_binary((fs::path(dir) / e.at("file").get<std::string>()).string(), m, m);
    }
    return h;
}

void write_fit_report_json(const std::string& path, const FitReport& report,
                           const std::vector<std::string>& param_names) {
    json j;
    j["status"] = report.status;
    j["converged"] = report.converged;
    j["iterations"] = report.iterations;
    j["seconds"] = report.seconds;
    j["oracle_apply_columns"] = report.apply_columns;
    j["oracle_derivative_columns"] = report.derivative_columns;
    j["params"] = param_names;
    j["theta_hat"] = json::array();
    for (Index i = 0; i < report.theta_hat.size(); ++i)
        j["theta_hat"].push_back(fmt17(report.theta_hat[i]));
    j["fisher"] = json::array();
    for (Index i = 0; i < report.fisher.rows(); ++i) {
        json row = json::array();
        for (Index c = 0; c < report.fisher.cols(); ++c) row.push_back(fmt17(report.fisher(i, c)));
        j["fisher"].push_back(row);
    }
    j["ci_valid"] = report.ci_valid;
    j["ci"] = json::array();
    for (Index i = 0; i < report.ci.rows(); ++i)
        j["ci"].push_back({fmt17(report.ci(i, 0)), fmt17(report.ci(i, 1))});
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

void write_iterations_csv(const std::string& path, const FitReport& report,
                          const std::vector<std::string>& param_names) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "iter,loglik,grad_norm";
    for (const auto& nm : param_names) out << "," << nm;
    out << "\n";
    for (std::size_t i = 0; i < report.loglik_trace.size(); ++i) {
        out << i << "," << fmt17(report.loglik_trace[i]) << ","
            << fmt17(report.grad_norm_trace[i]);
        const Eigen::VectorXd& th = report.theta_trace[i];
        for (Index c = 0; c < th.size(); ++c) out << "," << fmt17(th[c]);
        out << "\n";
    }
}

void write_ci_csv(const std::string& path, const FitReport& report,
                  const std::vector<std::string>& param_names) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "param,estimate,lo,hi\n";
    for (Index i = 0; i < report.theta_hat.size(); ++i) {
        out << param_names[static_cast<std::size_t>(i)] << "," << fmt17(report.theta_hat[i]);
        if (report.ci_valid)
            out << "," << fmt17(report.ci(i, 0)) << "," << fmt17(report.ci(i, 1));
        else
            out << ",invalid,invalid";
        out << "\n";
    }
}

}  // namespace hodlrgp
