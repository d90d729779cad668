#include "dparse/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dparse {

namespace {
std::int64_t shape_size(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative tensor dimension");
    n *= d;
  }
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_size(shape_)), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != static_cast<std::int64_t>(data_.size()))
    throw std::invalid_argument("tensor shape/data size mismatch");
}

Tensor Tensor::full(std::vector<int> shape, double v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

Tensor Tensor::row(std::vector<double> v) {
  int n = static_cast<int>(v.size());
  return Tensor({1, n}, std::move(v));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

int Tensor::cols() const {
  if (shape_.empty()) return 0;
  std::int64_t c = 1;
  for (std::size_t i = 1; i < shape_.size(); ++i) c *= shape_[i];
  return static_cast<int>(c);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double x) { return std::isfinite(x); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void matmul_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  const int m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k || c.rows() != m || c.cols() != n)
    throw std::invalid_argument("matmul shape mismatch");
  const double* A = a.data();
  const double* B = b.data();
  double* C = c.data();
  for (int i = 0; i < m; ++i) {
    const double* ai = A + static_cast<std::size_t>(i) * k;
    double* ci = C + static_cast<std::size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      const double av = ai[kk];
      if (av == 0.0) continue;
      const double* bk = B + static_cast<std::size_t>(kk) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bk[j];
    }
  }
}

void matmul_nt_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  const int m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k || c.rows() != m || c.cols() != n)
    throw std::invalid_argument("matmul_nt shape mismatch");
  const double* A = a.data();
  const double* B = b.data();
  double* C = c.data();
  for (int i = 0; i < m; ++i) {
    const double* ai = A + static_cast<std::size_t>(i) * k;
    double* ci = C + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = B + static_cast<std::size_t>(j) * k;
      double s = 0.0;
      for (int kk = 0; kk < k; ++kk) s += ai[kk] * bj[kk];
      ci[j] += s;
    }
  }
}

void matmul_tn_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  const int k = a.rows(), m = a.cols(), n = b.cols();
  if (b.rows() != k || c.rows() != m || c.cols() != n)
    throw std::invalid_argument("matmul_tn shape mismatch");
  const double* A = a.data();
  const double* B = b.data();
  double* C = c.data();
  for (int kk = 0; kk < k; ++kk) {
    const double* ak = A + static_cast<std::size_t>(kk) * m;
    const double* bk = B + static_cast<std::size_t>(kk) * n;
    for (int i = 0; i < m; ++i) {
      const double av = ak[i];
      if (av == 0.0) continue;
      double* ci = C + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bk[j];
    }
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tensor c({a.rows(), b.cols()});
  matmul_acc(a, b, c);
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  Tensor c({a.rows(), b.rows()});
  matmul_nt_acc(a, b, c);
  return c;
}

std::vector<double> log_softmax(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("log_softmax: empty vector");
  const double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx))
    throw std::invalid_argument("log_softmax: no finite entry");
  double z = 0.0;
  for (double x : v) z += std::exp(x - mx);
  const double lz = mx + std::log(z);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - lz;
  return out;
}

void log_softmax_rows_inplace(Tensor& m) {
  const int r = m.rows(), c = m.cols();
  for (int i = 0; i < r; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < c; ++j) mx = std::max(mx, m.at(i, j));
    if (!std::isfinite(mx))
      throw std::invalid_argument("log_softmax: fully masked row");
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(m.at(i, j) - mx);
    const double lz = mx + std::log(z);
    for (int j = 0; j < c; ++j) m.at(i, j) -= lz;
  }
}

}  // namespace dparse
