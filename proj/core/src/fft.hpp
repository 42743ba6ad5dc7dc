#pragma once

// Thin RAII layer over FFTW. Plans are created once (FFTW_ESTIMATE, so the
// chosen algorithm does not depend on timing) and executed through the
// new-array interface, which FFTW documents as thread-safe.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace fracdiff::detail {

template <class T>
struct FftwDeleter {
  void operator()(T* p) const noexcept { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter<T>>;

FftwBuffer<double> alloc_real(std::size_t n);
FftwBuffer<fftw_complex> alloc_complex(std::size_t n);

class Plan {
 public:
  Plan() = default;
  explicit Plan(fftw_plan p) : plan_(p) {}
  Plan(Plan&& o) noexcept : plan_(o.plan_) { o.plan_ = nullptr; }
  Plan& operator=(Plan&& o) noexcept;
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  ~Plan();
  fftw_plan get() const noexcept { return plan_; }

 private:
  fftw_plan plan_ = nullptr;
};

/// Multiplication by a real, even spectrum on a real periodic array of
/// shape dims (row-major): out = IFFT(spectrum * FFT(in)).
class RealCirculant {
 public:
  RealCirculant(std::vector<int> dims, std::vector<double> spectrum);
  /// Builds the spectrum from a real even generator (periodic kernel) of the same shape.
  static RealCirculant from_generator(std::vector<int> dims, std::span<const double> generator);

  std::size_t size() const noexcept { return n_; }
  void apply(std::span<const double> in, std::span<double> out) const;
  /// Half-complex spectrum layout: index of mode for r2c output.
  std::size_t spectrum_size() const noexcept { return nc_; }

 private:
  std::vector<int> dims_;
  std::size_t n_ = 0;
  std::size_t nc_ = 0;
  std::vector<double> spectrum_;
  Plan forward_;
  Plan backward_;
};

/// Diagonal multiplier in the sine basis sin(pi (k+1)(i+1/2)/M) per axis
/// (DST-II forward, DST-III backward).
class SineMultiplier {
 public:
  SineMultiplier(std::vector<int> dims, std::vector<double> multiplier);
  void apply(std::span<const double> in, std::span<double> out) const;

 private:
  std::vector<int> dims_;
  std::size_t n_ = 0;
  std::vector<double> multiplier_;
  Plan forward_;
  Plan backward_;
};

}  // namespace fracdiff::detail
