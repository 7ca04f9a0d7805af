#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "hodlrgp/io.hpp"

using namespace hodlrgp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("hodlrgp_io_" + std::to_string(std::rand()) + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("fmt17 round-trips doubles through decimal text") {
    for (double v : {1.0, -0.1, 3.141592653589793, 1e-300, 12345.678901234567,
                     2.2250738585072014e-308}) {
        CHECK(std::stod(fmt17(v)) == v);
    }
}

TEST_CASE("point CSV round-trip in one and two dimensions") {
    TempDir tmp;
    for (int d : {1, 2}) {
        PointSet p;
        p.coords = Eigen::MatrixXd::Random(13, d);
        std::string path = (tmp.path / "pts.csv").string();
        write_points_csv(path, p);
        PointSet back = read_points_csv(path);
        CHECK(back.dim() == d);
        CHECK((back.coords - p.coords).norm() == 0.0);
    }
}

TEST_CASE("dataset CSV round-trip preserves names and exact values") {
    TempDir tmp;
    Dataset ds;
    ds.coords = Eigen::MatrixXd::Random(9, 2);
    ds.values = Eigen::MatrixXd::Random(9, 2);
    ds.value_names = {"u", "v"};
    std::string path = (tmp.path / "ds.csv").string();
    write_dataset_csv(path, ds);
    Dataset back = read_dataset_csv(path);
    CHECK(back.value_names == ds.value_names);
    CHECK((back.coords - ds.coords).norm() == 0.0);
    CHECK((back.values - ds.values).norm() == 0.0);
}

TEST_CASE("malformed CSV input is rejected") {
    TempDir tmp;
    std::string path = (tmp.path / "bad.csv").string();
    {
        std::ofstream out(path);
        out << "x1,x2,y\n1.0,2.0\n";  // ragged row
    }
    CHECK_THROWS_AS((void)read_dataset_csv(path), std::runtime_error);
    {
        std::ofstream out(path);
        out << "x1,x2,y\n1.0,zzz,3.0\n";
    }
    CHECK_THROWS_AS((void)read_dataset_csv(path), std::runtime_error);
    {
        std::ofstream out(path);
        out << "lat,lon,y\n1.0,2.0,3.0\n";
    }
    CHECK_THROWS_AS((void)read_dataset_csv(path), std::runtime_error);
    CHECK_THROWS_AS((void)read_points_csv((tmp.path / "missing.csv").string()),
                    std::runtime_error);
}

TEST_CASE("permutation CSV") {
    TempDir tmp;
    std::string path = (tmp.path / "perm.csv").string();
    write_permutation_csv(path, {2, 0, 1});
    std::ifstream in(path);
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(all == "perm\n2\n0\n1\n");
}

TEST_CASE("debug serialization round-trips symmetric and asymmetric matrices") {
    TempDir tmp;
    ClusterTree tree(50, 2);
    HodlrMatrix h = HodlrMatrix::random_spd(tree, 3, 4);
    write_hodlr_debug(tmp.path.string(), "sym", h);
    HodlrMatrix back = read_hodlr_debug(tmp.path.string(), "sym");
    CHECK(back.symmetric());
    CHECK((back.densify() - h.densify()).norm() == 0.0);

    h.make_asymmetric();
    h.lower(1, 0).left *= 2.0;  // genuinely asymmetric content
    write_hodlr_debug(tmp.path.string(), "asym", h);
    HodlrMatrix back2 = read_hodlr_debug(tmp.path.string(), "asym");
    CHECK(!back2.symmetric());
    CHECK((back2.densify() - h.densify()).norm() == 0.0);
}

TEST_CASE("fit artifacts are written with full precision") {
    TempDir tmp;
    FitReport rep;
    rep.theta_hat = Eigen::Vector2d(0.123456789012345678, 2.0);
    rep.iterations = 2;
    rep.converged = true;
    rep.status = "converged";
    rep.loglik_trace = {-10.0, -9.5, -9.25};
    rep.grad_norm_trace = {1.0, 0.5, 0.1};
    rep.theta_trace = {Eigen::Vector2d(0.1, 1.9), Eigen::Vector2d(0.12, 1.95),
                       Eigen::Vector2d(0.1234, 2.0)};
    rep.fisher = Eigen::Matrix2d::Identity();
    rep.ci = Eigen::MatrixXd(2, 2);
    rep.ci << 0.1, 0.2, 1.8, 2.2;
    rep.ci_valid = true;
    std::vector<std::string> names = {"a", "b"};
    write_fit_report_json((tmp.path / "r.json").string(), rep, names);
    write_iterations_csv((tmp.path / "it.csv").string(), rep, names);
    write_ci_csv((tmp.path / "ci.csv").string(), rep, names);

    std::ifstream ci(tmp.path / "ci.csv");
    std::string line;
    std::getline(ci, line);
    CHECK(line == "param,estimate,lo,hi");
    std::getline(ci, line);
    CHECK(line.substr(0, 2) == "a,");
    CHECK(line.find(fmt17(rep.theta_hat[0])) != std::string::npos);

    std::ifstream it(tmp.path / "it.csv");
    std::getline(it, line);
    CHECK(line == "iter,loglik,grad_norm,a,b");
    int rows = 0;
    while (std::getline(it, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 3);

    std::ifstream js(tmp.path / "r.json");
    std::string all((std::istreambuf_iterator<char>(js)), std::istreambuf_iterator<char>());
    CHECK(all.find("\"converged\": true") != std::string::npos);
    CHECK(all.find(fmt17(rep.theta_hat[0])) != std::string::npos);
}

TEST_SUITE_END();
