#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>

namespace meshfit {

template <typename S>
using Vec3T = Eigen::Matrix<S, 3, 1>;
template <typename S>
using MatX3T = Eigen::Matrix<S, Eigen::Dynamic, 3>;

using Scalar = double;
using Vec3 = Vec3T<double>;
using MatX3 = MatX3T<double>;
using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;
using VecXi = Eigen::VectorXi;
using FaceMat = Eigen::Matrix<int, Eigen::Dynamic, 3>;
using EdgeMat = Eigen::Matrix<int, Eigen::Dynamic, 2>;
using SparseMat = Eigen::SparseMatrix<double>;

using seed_t = std::uint64_t;

}  // namespace meshfit
