#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <string>

namespace dgtrack {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
// Point tables (one point per row) use row-major storage so row(i).data()
// is a contiguous coordinate tuple.
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Geometry became invalid (non-positive mapping Jacobian and the like).
struct invalid_geometry : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flux/state evaluation hit an inadmissible state (negative density, ...).
// Recoverable: the optimizer linesearch rejects the trial step.
struct physics_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct solver_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dgtrack
