#pragma once

#include <Eigen/Dense>

#include "murmur/nn/tensor.h"

namespace murmur::nn::detail {

using MatR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;
using StridedR = Eigen::Map<MatR, 0, Eigen::OuterStride<>>;
using CStridedR = Eigen::Map<const MatR, 0, Eigen::OuterStride<>>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using CVecMap = Eigen::Map<const Eigen::VectorXd>;

inline std::size_t cols_of(const Tensor& t) { return t.ndim() == 0 ? 1 : t.shape().back(); }
inline std::size_t rows_of(const Tensor& t) {
  const auto c = cols_of(t);
  return c == 0 ? 0 : t.size() / c;
}

inline MapR as_matrix(Tensor& t) {
  return MapR(t.data(), static_cast<Eigen::Index>(rows_of(t)), static_cast<Eigen::Index>(cols_of(t)));
}
inline CMapR as_matrix(const Tensor& t) {
  return CMapR(t.data(), static_cast<Eigen::Index>(rows_of(t)), static_cast<Eigen::Index>(cols_of(t)));
}
inline VecMap as_vector(Tensor& t) { return VecMap(t.data(), static_cast<Eigen::Index>(t.size())); }
inline CVecMap as_vector(const Tensor& t) { return CVecMap(t.data(), static_cast<Eigen::Index>(t.size())); }

}  // namespace murmur::nn::detail
