#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hodlrgp/cluster_tree.hpp"
#include "hodlrgp/hodlr_matrix.hpp"
#include "hodlrgp/mle.hpp"

namespace hodlrgp {

/// 17-significant-digit decimal rendering (round-trips binary64).
std::string fmt17(double v);

/// Point CSVs use header "x1" or "x1,x2".
PointSet read_points_csv(const std::string& path);
void write_points_csv(const std::string& path, const PointSet& points);

/// Permutation CSV: single column "perm" (original -> reordered position).
void write_permutation_csv(const std::string& path, const std::vector<Index>& perm);

/// Dataset CSVs: coordinates followed by one or more value columns, e.g.
/// "x1,x2,y" or "x1,x2,u,v".
struct Dataset {
    Eigen::MatrixXd coords;
    Eigen::MatrixXd values;
    std::vector<std::string> value_names;
};
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const std::string& path, const Dataset& ds);

/// Debug serialization: JSON manifest (tree ranges, per-block ranks, sidecar
/// names) plus row-major little-endian float64 sidecars under `dir`.
void write_hodlr_debug(const std::string& dir, const std::string& name, const HodlrMatrix& h);
HodlrMatrix read_hodlr_debug(const std::string& dir, const std::string& name);

/// Fit artifacts.
void write_fit_report_json(const std::string& path, const FitReport& report,
                           const std::vector<std::string>& param_names);
void write_iterations_csv(const std::string& path, const FitReport& report,
                          const std::vector<std::string>& param_names);
void write_ci_csv(const std::string& path, const FitReport& report,
                  const std::vector<std::string>& param_names);

}  // namespace hodlrgp
