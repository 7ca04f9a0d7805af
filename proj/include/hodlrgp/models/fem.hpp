#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>

#include "hodlrgp/cluster_tree.hpp"

namespace hodlrgp {

/// P1 finite elements on a structured triangulation of a rectangle with
/// natural Neumann boundary. Each grid square is split along its main
/// diagonal into two triangles.
struct FemDiscretization {
    Eigen::MatrixXd nodes;          // n_basis x 2 node coordinates
    Eigen::SparseMatrix<double> c;  // consistent mass matrix
    Eigen::VectorXd c_lumped;       // row-sum lumped mass (diagonal)
    Eigen::SparseMatrix<double> s;  // stiffness matrix
    Index n_basis = 0;
    int nx = 0, ny = 0;             // cells per axis
    double x0 = 0, y0 = 0, hx = 0, hy = 0;

    /// Barycentric interpolation matrix (n_obs x n_basis); row sums are 1.
    /// Throws if a point falls outside the meshed rectangle.
    Eigen::SparseMatrix<double> interpolation(const Eigen::MatrixXd& obs) const;
};

FemDiscretization assemble_fem(double lo_x, double hi_x, double lo_y, double hi_y,
                               int mesh_n);

/// First-derivative operators d/dx and d/dy on the structured node grid:
/// second-order central differences inside, one-sided at the boundary.
Eigen::SparseMatrix<double> grid_diff_x(const FemDiscretization& fem);
Eigen::SparseMatrix<double> grid_diff_y(const FemDiscretization& fem);

/// Galerkin matrix of the advection-diffusion-reaction operator
/// -div(kappa grad u) + v . grad u + c u with v evaluated per-element at the
/// triangle centroid.
Eigen::SparseMatrix<double> assemble_adr_operator(
    const FemDiscretization& fem, double kappa, double react,
    const std::function<Eigen::Vector2d(double, double)>& velocity);

}  // namespace hodlrgp
