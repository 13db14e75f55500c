#pragma once

// Independent reference computations shared by unit and acceptance tests.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace oracle {

/// Schmidt number of an n×n real amplitude matrix from its singular values:
/// K = 1 / Σ λ², λ = s² / Σ s².
inline double svd_schmidt(const std::vector<double>& amplitude, std::size_t n) {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      amplitude.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd s2 = svd.singularValues().array().square();
  const Eigen::VectorXd lambda = s2 / s2.sum();
  return 1.0 / lambda.squaredNorm();
}

/// Direct O(n²) centred DFT of one axis: Σ_i f_i e^{sign·i k_i x_j} / √n.
inline std::vector<std::complex<double>> direct_dft(const std::vector<std::complex<double>>& f,
                                                    double dk, int sign) {
  const std::size_t n = f.size();
  const double dx = 2.0 * M_PI / (static_cast<double>(n) * dk);
  std::vector<std::complex<double>> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = (static_cast<double>(j) - static_cast<double>(n / 2)) * dx;
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double k = (static_cast<double>(i) - static_cast<double>(n / 2)) * dk;
      acc += f[i] * std::polar(1.0, sign * k * x);
    }
    out[j] = acc / std::sqrt(static_cast<double>(n));
  }
  return out;
}

}  // namespace oracle
