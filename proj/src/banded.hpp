#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace smbbayes::detail {

/// Square band matrix with LU factorization without pivoting. Only used for
/// diagonally dominant systems (I - h*gamma*A with A an M-matrix generator).
class BandMatrix {
 public:
  BandMatrix() = default;
  BandMatrix(std::size_t n, std::size_t lower, std::size_t upper)
      : n_(n), kl_(lower), ku_(upper), width_(lower + upper + 1), data_(n * width_, 0.0) {}

  std::size_t size() const { return n_; }
  std::size_t lower() const { return kl_; }
  std::size_t upper() const { return ku_; }

  // Entry (i, j) with j - i in [-kl, ku].
  double& operator()(std::size_t i, std::size_t j) { return data_[i * width_ + (j + kl_ - i)]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * width_ + (j + kl_ - i)]; }

  void multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t j0 = i >= kl_ ? i - kl_ : 0;
      const std::size_t j1 = std::min(n_ - 1, i + ku_);
      double s = 0.0;
      for (std::size_t j = j0; j <= j1; ++j) s += (*this)(i, j) * x[j];
      y[i] = s;
    }
  }

  /// In-place Doolittle factorization; L has unit diagonal.
  void factorize() {
    for (std::size_t k = 0; k + 1 < n_; ++k) {
      const double pivot = (*this)(k, k);
      const std::size_t imax = std::min(n_ - 1, k + kl_);
      const std::size_t jmax = std::min(n_ - 1, k + ku_);
      for (std::size_t i = k + 1; i <= imax; ++i) {
        const double m = (*this)(i, k) / pivot;
        (*this)(i, k) = m;
        if (m == 0.0) continue;
        for (std::size_t j = k + 1; j <= jmax; ++j) (*this)(i, j) -= m * (*this)(k, j);
      }
    }
  }

  /// Solves in place using the factors from factorize().
  void solve(std::span<double> b) const {
    for (std::size_t i = 1; i < n_; ++i) {
      const std::size_t j0 = i >= kl_ ? i - kl_ : 0;
      double s = b[i];
      for (std::size_t j = j0; j < i; ++j) s -= (*this)(i, j) * b[j];
      b[i] = s;
    }
    for (std::size_t ii = n_; ii-- > 0;) {
      const std::size_t j1 = std::min(n_ - 1, ii + ku_);
      double s = b[ii];
      for (std::size_t j = ii + 1; j <= j1; ++j) s -= (*this)(ii, j) * b[j];
      b[ii] = s / (*this)(ii, ii);
    }
  }

 private:
  std::size_t n_ = 0;
  std::size_t kl_ = 0;
  std::size_t ku_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

}  // namespace smbbayes::detail
