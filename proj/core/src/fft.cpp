#include "fft.hpp"

#include <algorithm>
#include <mutex>
#include <new>

#include "fracdiff/error.hpp"

namespace fracdiff::detail {

namespace {
// FFTW's planner and plan destruction are not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t product(const std::vector<int>& dims) {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

std::size_t half_complex_size(const std::vector<int>& dims) {
  return product(dims) / static_cast<std::size_t>(dims.back()) * static_cast<std::size_t>(dims.back() / 2 + 1);
}
}  // namespace

FftwBuffer<double> alloc_real(std::size_t n) {
  auto* p = static_cast<double*>(fftw_malloc(sizeof(double) * std::max<std::size_t>(n, 1)));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer<double>(p);
}

FftwBuffer<fftw_complex> alloc_complex(std::size_t n) {
  auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * std::max<std::size_t>(n, 1)));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer<fftw_complex>(p);
}

Plan& Plan::operator=(Plan&& o) noexcept {
  if (this != &o) {
    if (plan_ != nullptr) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    plan_ = o.plan_;
    o.plan_ = nullptr;
  }
  return *this;
}

Plan::~Plan() {
  if (plan_ != nullptr) {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
}

RealCirculant::RealCirculant(std::vector<int> dims, std::vector<double> spectrum)
    : dims_(std::move(dims)), n_(product(dims_)), nc_(half_complex_size(dims_)), spectrum_(std::move(spectrum)) {
  require(spectrum_.size() == nc_, ErrorKind::InvalidInput, "circulant spectrum has wrong size");
  auto r = alloc_real(n_);
  auto c = alloc_complex(nc_);
  std::lock_guard lock(planner_mutex());
  const int rank = static_cast<int>(dims_.size());
  forward_ = Plan(fftw_plan_dft_r2c(rank, dims_.data(), r.get(), c.get(), FFTW_ESTIMATE));
  backward_ = Plan(fftw_plan_dft_c2r(rank, dims_.data(), c.get(), r.get(), FFTW_ESTIMATE));
}

RealCirculant RealCirculant::from_generator(std::vector<int> dims, std::span<const double> generator) {
  const std::size_t n = product(dims);
  const std::size_t nc = half_complex_size(dims);
  require(generator.size() == n, ErrorKind::InvalidInput, "circulant generator has wrong size");
  auto r = alloc_real(n);
  auto c = alloc_complex(nc);
  std::copy(generator.begin(), generator.end(), r.get());
  {
    Plan p;
    {
      std::lock_guard lock(planner_mutex());
      p = Plan(fftw_plan_dft_r2c(static_cast<int>(dims.size()), dims.data(), r.get(), c.get(), FFTW_ESTIMATE));
    }
    fftw_execute(p.get());
  }
  std::vector<double> spectrum(nc);
  for (std::size_t k = 0; k < nc; ++k) spectrum[k] = c[k][0];
  return RealCirculant(std::move(dims), std::move(spectrum));
}

void RealCirculant::apply(std::span<const double> in, std::span<double> out) const {
  auto r = alloc_real(n_);
  auto c = alloc_complex(nc_);
  std::copy(in.begin(), in.end(), r.get());
  fftw_execute_dft_r2c(forward_.get(), r.get(), c.get());
  const double scale = 1.0 / static_cast<double>(n_);
  for (std::size_t k = 0; k < nc_; ++k) {
    const double m = spectrum_[k] * scale;
    c[k][0] *= m;
    c[k][1] *= m;
  }
  fftw_execute_dft_c2r(backward_.get(), c.get(), r.get());
  std::copy(r.get(), r.get() + n_, out.begin());
}

SineMultiplier::SineMultiplier(std::vector<int> dims, std::vector<double> multiplier)
    : dims_(std::move(dims)), n_(product(dims_)), multiplier_(std::move(multiplier)) {
  require(multiplier_.size() == n_, ErrorKind::InvalidInput, "sine multiplier has wrong size");
  auto a = alloc_real(n_);
  auto b = alloc_real(n_);
  const int rank = static_cast<int>(dims_.size());
  std::vector<fftw_r2r_kind> fwd(dims_.size(), FFTW_RODFT10), bwd(dims_.size(), FFTW_RODFT01);
  std::lock_guard lock(planner_mutex());
  forward_ = Plan(fftw_plan_r2r(rank, dims_.data(), a.get(), b.get(), fwd.data(), FFTW_ESTIMATE));
  backward_ = Plan(fftw_plan_r2r(rank, dims_.data(), b.get(), a.get(), bwd.data(), FFTW_ESTIMATE));
}

void SineMultiplier::apply(std::span<const double> in, std::span<double> out) const {
  auto a = alloc_real(n_);
  auto b = alloc_real(n_);
  std::copy(in.begin(), in.end(), a.get());
  fftw_execute_r2r(forward_.get(), a.get(), b.get());
  double norm = 1.0;
  for (int d : dims_) norm *= 2.0 * d;
  for (std::size_t k = 0; k < n_; ++k) b[k] *= multiplier_[k] / norm;
  fftw_execute_r2r(backward_.get(), b.get(), a.get());
  std::copy(a.get(), a.get() + n_, out.begin());
}

}  // namespace fracdiff::detail
