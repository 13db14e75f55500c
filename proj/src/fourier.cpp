#include "biphoton/fourier.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <vector>

namespace biphoton {
namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<int> dims_of(const Grid& grid) {
  std::vector<int> dims;
  for (const auto& a : grid.axes()) dims.push_back(static_cast<int>(a.n));
  return dims;
}

fftw_plan make_plan(const Grid& grid, int sign, complex* data) {
  const auto dims = dims_of(grid);
  auto* ptr = reinterpret_cast<fftw_complex*>(data);
  std::lock_guard lock(planner_mutex());
  fftw_plan plan = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), ptr, ptr,
                                 sign > 0 ? FFTW_BACKWARD : FFTW_FORWARD,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (plan == nullptr) throw ShapeError("FFTW could not plan transform");
  return plan;
}

// Centering on even axes: (-1)^{sum i} before and after the raw DFT, with a
// global (-1)^{sum n/2}. Folding the global sign and 1/sqrt(N) into the
// second pass keeps it to two sweeps.
void modulate(std::span<complex> data, const Grid& grid, double scale) {
  const std::size_t rank = grid.rank();
  std::vector<std::size_t> idx(rank, 0);
  std::size_t index_sum = 0;  // sum of the multi-index components
  for (auto& v : data) {
    v *= (index_sum & 1U) ? -scale : scale;
    for (std::size_t d = rank; d-- > 0;) {
      ++index_sum;
      if (++idx[d] < grid.axis(d).n) break;
      index_sum -= grid.axis(d).n;
      idx[d] = 0;
    }
  }
}

double output_scale(const Grid& grid) {
  std::size_t half_sum = 0;
  for (const auto& a : grid.axes()) half_sum += a.n / 2;
  const double norm = 1.0 / std::sqrt(static_cast<double>(grid.size()));
  return (half_sum % 2 == 0) ? norm : -norm;
}

}  // namespace

ComplexField fourier_transform(const ComplexField& field, int sign) {
  if (field.values.size() != field.grid.size()) {
    throw ShapeError("fourier_transform: values do not conform to grid");
  }
  if (sign != 1 && sign != -1) throw DomainError("fourier_transform: sign must be +1 or -1");
  ComplexField out(field.grid.reciprocal(), field.values);
  fftw_plan plan = make_plan(field.grid, sign, out.values.data());
  modulate(out.values, field.grid, 1.0);
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  modulate(out.values, field.grid, output_scale(field.grid));
  return out;
}

FourierPlan::FourierPlan(const Grid& grid, int sign) : grid_(grid), sign_(sign) {
  if (sign != 1 && sign != -1) throw DomainError("FourierPlan: sign must be +1 or -1");
  std::vector<complex> scratch(grid.size());
  plan_ = make_plan(grid, sign, scratch.data());
}

FourierPlan::~FourierPlan() {
  if (plan_ != nullptr) {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  }
}

void FourierPlan::execute(std::span<complex> data) const {
  if (data.size() != grid_.size()) throw ShapeError("FourierPlan: size mismatch");
  modulate(data, grid_, 1.0);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(static_cast<fftw_plan>(plan_), ptr, ptr);
  modulate(data, grid_, output_scale(grid_));
}

}  // namespace biphoton
