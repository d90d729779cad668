#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace dparse {

/// Dense row-major tensor of doubles. Most tensors in the parser are
/// matrices; label biaffine weights are rank-3 (L x d x d).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, double v);
  static Tensor row(std::vector<double> v);  // 1 x n
  static Tensor scalar(double v);            // shape {1}

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

  // 2-D accessors; rows() returns 1 for vectors.
  int rows() const { return shape_.empty() ? 0 : shape_[0]; }
  int cols() const;

  double& at(int i, int j) { return data_[static_cast<std::size_t>(i) * cols() + j]; }
  double at(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols() + j]; }
  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;
  void fill(double v);

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

// Kernels shared by the autodiff tape and the tape-free inference path.

// C += A * B, A: m x k, B: k x n.
void matmul_acc(const Tensor& a, const Tensor& b, Tensor& c);
// C += A * B^T, A: m x k, B: n x k.
void matmul_nt_acc(const Tensor& a, const Tensor& b, Tensor& c);
// C += A^T * B, A: k x m, B: k x n.
void matmul_tn_acc(const Tensor& a, const Tensor& b, Tensor& c);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);

/// Numerically stable log-softmax of a vector; -inf entries are treated
/// as masked out (probability zero).
std::vector<double> log_softmax(const std::vector<double>& v);

/// In-place row-wise log-softmax of a matrix.
void log_softmax_rows_inplace(Tensor& m);

}  // namespace dparse
