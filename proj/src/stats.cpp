#include "biphoton/stats.hpp"

#include <algorithm>
#include <cmath>

namespace biphoton {

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("pearson_correlation: size mismatch");
  if (a.size() < 2) throw ShapeError("pearson_correlation: need at least two samples");
  const auto n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0;
  double sbb = 0.0;
  double sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) {
    throw DomainError("pearson_correlation: undefined variance (constant input)");
  }
  const double r = sab / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

double pearson_correlation(const RealField& a, const RealField& b) {
  if (a.grid.shape() != b.grid.shape()) throw ShapeError("pearson_correlation: shape mismatch");
  return pearson_correlation(std::span<const double>(a.values), std::span<const double>(b.values));
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw ShapeError("mean_std: empty input");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

double relative_l2(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("relative_l2: size mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += a[i] * a[i];
  }
  if (!(den > 0.0)) throw DomainError("relative_l2: reference has zero norm");
  return std::sqrt(num / den);
}

}  // namespace biphoton
