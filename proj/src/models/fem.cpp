#include "hodlrgp/models/fem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace hodlrgp {

namespace {

using Triplet = Eigen::Triplet<double>;

struct Tri {
    Index v[3];
    Eigen::Vector2d p[3];
};

/// Enumerate the two triangles of every grid square; the diagonal runs from
/// the square's lower-left to upper-right corner.
template <typename Fn>
void for_each_triangle(const FemDiscretization& fem, Fn&& fn) {
    auto node = [&](int i, int j) { return Index(j) * (fem.nx + 1) + i; };
    for (int j = 0; j < fem.ny; ++j)
        for (int i = 0; i < fem.nx; ++i) {
            Index v00 = node(i, j), v10 = node(i + 1, j);
            Index v01 = node(i, j + 1), v11 = node(i + 1, j + 1);
            Tri t1{{v00, v10, v11}, {}};
            Tri t2{{v00, v11, v01}, {}};
            for (int k = 0; k < 3; ++k) {
                t1.p[k] = fem.nodes.row(t1.v[k]).transpose();
                t2.p[k] = fem.nodes.row(t2.v[k]).transpose();
            }
            fn(t1);
            fn(t2);
        }
}

}  // namespace

FemDiscretization assemble_fem(double lo_x, double hi_x, double lo_y, double hi_y,
                               int mesh_n) {
    if (mesh_n < 2) throw std::invalid_argument("assemble_fem: mesh_n >= 2 required");
    if (!(hi_x > lo_x) || !(hi_y > lo_y))
        throw std::invalid_argument("assemble_fem: empty domain");

    FemDiscretization fem;
    fem.nx = fem.ny = mesh_n;
    fem.x0 = lo_x;
    fem.y0 = lo_y;
    fem.hx = (hi_x - lo_x) / mesh_n;
    fem.hy = (hi_y - lo_y) / mesh_n;
    fem.n_basis = Index(mesh_n + 1) * (mesh_n + 1);
    fem.nodes.resize(fem.n_basis, 2);
    for (int j = 0; j <= mesh_n; ++j)
        for (int i = 0; i <= mesh_n; ++i) {
            Index id = Index(j) * (mesh_n + 1) + i;
            fem.nodes(id, 0) = lo_x + i * fem.hx;
            fem.nodes(id, 1) = lo_y + j * fem.hy;
        }

    std::vector<Triplet> tc, ts;
    tc.reserve(std::size_t(fem.nx) * fem.ny * 18);
    ts.reserve(tc.capacity());
    for_each_triangle(fem, [&](const Tri& t) {
        Eigen::Vector2d e1 = t.p[1] - t.p[0], e2 = t.p[2] - t.p[0];
        double area2 = e1.x() * e2.y() - e1.y() * e2.x();  // 2 * signed area
        double area = 0.5 * std::abs(area2);
        // Barycentric gradients.
        Eigen::Vector2d g[3];
        g[0] = Eigen::Vector2d(t.p[1].y() - t.p[2].y(), t.p[2].x() - t.p[1].x()) / area2;
        g[1] = Eigen::Vector2d(t.p[2].y() - t.p[0].y(), t.p[0].x() - t.p[2].x()) / area2;
        g[2] = Eigen::Vector2d(t.p[0].y() - t.p[1].y(), t.p[1].x() - t.p[0].x()) / area2;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                tc.emplace_back(t.v[a], t.v[b], area / 12.0 * (a == b ? 2.0 : 1.0));
                ts.emplace_back(t.v[a], t.v[b], area * g[a].dot(g[b]));
            }
    });
    fem.c.resize(fem.n_basis, fem.n_basis);
    fem.c.setFromTriplets(tc.begin(), tc.end());
    fem.s.resize(fem.n_basis, fem.n_basis);
    fem.s.setFromTriplets(ts.begin(), ts.end());
    fem.c_lumped = fem.c * Eigen::VectorXd::Ones(fem.n_basis);
    return fem;
}

Eigen::SparseMatrix<double> FemDiscretization::interpolation(const Eigen::MatrixXd& obs) const {
    const Index m = obs.rows();
    std::vector<Triplet> tp;
    tp.reserve(std::size_t(m) * 3);
    const double eps = 1e-12 * std::max(hx, hy);
    auto node = [&](int i, int j) { return Index(j) * (nx + 1) + i; };
    for (Index r = 0; r < m; ++r) {
        double x = obs(r, 0), y = obs(r, 1);
        if (x < x0 - eps || y < y0 - eps || x > x0 + nx * hx + eps || y > y0 + ny * hy + eps)
            throw std::invalid_argument("interpolation: point outside meshed domain");
        int i = std::clamp(int(std::floor((x - x0) / hx)), 0, nx - 1);
        int j = std::clamp(int(std::floor((y - y0) / hy)), 0, ny - 1);
        double xi = (x - (x0 + i * hx)) / hx;
        double eta = (y - (y0 + j * hy)) / hy;
        if (xi >= eta) {  // triangle (v00, v10, v11)
            tp.emplace_back(r, node(i, j), 1.0 - xi);
            tp.emplace_back(r, node(i + 1, j), xi - eta);
            tp.emplace_back(r, node(i + 1, j + 1), eta);
        } else {  // triangle (v00, v11, v01)
            tp.emplace_back(r, node(i, j), 1.0 - eta);
            tp.emplace_back(r, node(i + 1, j + 1), xi);
            tp.emplace_back(r, node(i, j + 1), eta - xi);
        }
    }
    Eigen::SparseMatrix<double> phi(m, n_basis);
    phi.setFromTriplets(tp.begin(), tp.end());
    return phi;
}

namespace {

Eigen::SparseMatrix<double> grid_diff(const FemDiscretization& fem, bool along_x) {
    const int nx = fem.nx, ny = fem.ny;
    const double h = along_x ? fem.hx : fem.hy;
    std::vector<Triplet> tp;
    auto node = [&](int i, int j) { return Index(j) * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            Index r = node(i, j);
            int t = along_x ? i : j;
            int tmax = along_x ? nx : ny;
            auto idx = [&](int tt) { return along_x ? node(tt, j) : node(i, tt); };
            if (t == 0) {
                tp.emplace_back(r, idx(0), -1.0 / h);
                tp.emplace_back(r, idx(1), 1.0 / h);
            } else if (t == tmax) {
                tp.emplace_back(r, idx(tmax - 1), -1.0 / h);
                tp.emplace_back(r, idx(tmax), 1.0 / h);
            } else {
                tp.emplace_back(r, idx(t - 1), -0.5 / h);
                tp.emplace_back(r, idx(t + 1), 0.5 / h);
            }
        }
    Eigen::SparseMatrix<double> d(fem.n_basis, fem.n_basis);
    d.setFromTriplets(tp.begin(), tp.end());
    return d;
}

}  // namespace

Eigen::SparseMatrix<double> grid_diff_x(const FemDiscretization& fem) {
    return grid_diff(fem, true);
}

Eigen::SparseMatrix<double> grid_diff_y(const FemDiscretization& fem) {
    return grid_diff(fem, false);
}

Eigen::SparseMatrix<double> assemble_adr_operator(
    const FemDiscretization& fem, double kappa, double react,
    const std::function<Eigen::Vector2d(double, double)>& velocity) {
    std::vector<Triplet> tp;
    tp.reserve(std::size_t(fem.nx) * fem.ny * 18);
    for_each_triangle(fem, [&](const Tri& t) {
        Eigen::Vector2d e1 = t.p[1] - t.p[0], e2 = t.p[2] - t.p[0];
        double area2 = e1.x() * e2.y() - e1.y() * e2.x();
        double area = 0.5 * std::abs(area2);
        Eigen::Vector2d g[3];
        g[0] = Eigen::Vector2d(t.p[1].y() - t.p[2].y(), t.p[2].x() - t.p[1].x()) / area2;
        g[1] = Eigen::Vector2d(t.p[2].y() - t.p[0].y(), t.p[0].x() - t.p[2].x()) / area2;
        g[2] = Eigen::Vector2d(t.p[0].y() - t.p[1].y(), t.p[1].x() - t.p[0].x()) / area2;
        Eigen::Vector2d cen = (t.p[0] + t.p[1] + t.p[2]) / 3.0;
        Eigen::Vector2d vc = velocity(cen.x(), cen.y());
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                double val = kappa * area * g[a].dot(g[b]);            // diffusion
                val += (area / 3.0) * vc.dot(g[b]);                    // advection
                val += react * area / 12.0 * (a == b ? 2.0 : 1.0);     // reaction
                tp.emplace_back(t.v[a], t.v[b], val);
            }
    });
    Eigen::SparseMatrix<double> op(fem.n_basis, fem.n_basis);
    op.setFromTriplets(tp.begin(), tp.end());
    return op;
}

}  // namespace hodlrgp
