#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "error.hpp"

namespace edp {

using cplx = std::complex<double>;
using RealField = std::vector<double>;
using SpectralField = std::vector<cplx>;
using MultiIndex = std::array<int, 3>;

/// Real-space state u = (a, v). Component 0 is a, components 1..dim are v.
struct State {
  std::vector<RealField> comps;

  int dim() const { return static_cast<int>(comps.size()) - 1; }
  RealField& a() { return comps[0]; }
  const RealField& a() const { return comps[0]; }
  RealField& v(int i) { return comps[1 + i]; }
  const RealField& v(int i) const { return comps[1 + i]; }

  State& operator+=(const State& other);
  State& operator-=(const State& other);
  State& operator*=(double c);
};

State operator+(State lhs, const State& rhs);
State operator-(State lhs, const State& rhs);
State operator*(double c, State s);

/// Half-spectrum (r2c layout) coefficients, one array per component.
struct SpectralState {
  std::vector<SpectralField> comps;

  int dim() const { return static_cast<int>(comps.size()) - 1; }

  SpectralState& operator+=(const SpectralState& other);
  SpectralState& operator-=(const SpectralState& other);
  SpectralState& operator*=(double c);
  /// this += c * other
  void axpy(double c, const SpectralState& other);
  void axpy(cplx c, const SpectralState& other);
};

SpectralState operator+(SpectralState lhs, const SpectralState& rhs);
SpectralState operator-(SpectralState lhs, const SpectralState& rhs);
SpectralState operator*(double c, SpectralState s);

/// Torus [-L, L)^dim sampled with n points per axis. Sample j along an axis
/// sits at x = j*h wrapped into [-L, L), so the origin is index 0.
///
/// Spectral coefficients are normalized Fourier-series coefficients
/// (f = sum_m c_m e^{i xi_m x}), stored in the r2c half-spectrum layout:
/// the last axis holds m = 0..n/2 only.
class Grid {
 public:
  Grid(int dim, int n, double half_length);
  ~Grid();
  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  int dim() const { return dim_; }
  int n() const { return n_; }
  double half_length() const { return half_length_; }
  double spacing() const { return 2.0 * half_length_ / n_; }
  double cell_volume() const;
  double volume() const;
  double fundamental() const;  // pi / L
  double wavenumber_max() const { return wavenumber_max_; }

  std::size_t num_points() const { return num_points_; }
  std::size_t num_modes() const { return num_modes_; }

  const MultiIndex& index(std::size_t q) const { return index_[q]; }
  const std::array<double, 3>& wavevector(std::size_t q) const { return xi_[q]; }
  double wavenumber(std::size_t q) const { return xi_norm_[q]; }
  /// Number of copies of mode q in the full spectrum (1 or 2).
  double multiplicity(std::size_t q) const { return multiplicity_[q]; }
  bool is_nyquist(std::size_t q) const { return (flags_[q] & kNyquist) != 0; }
  /// Mode lies outside the 2/3-rule retained cube.
  bool is_truncated(std::size_t q) const { return (flags_[q] & kTruncated) != 0; }
  /// |m_axis| == n/2 on that axis.
  bool is_nyquist_axis(std::size_t q, int axis) const {
    return (flags_[q] & (kNyquistAxis0 << axis)) != 0;
  }

  std::array<double, 3> position(std::size_t p) const;
  double distance_to_origin(std::size_t p) const;

  RealField zero_field() const { return RealField(num_points_, 0.0); }
  SpectralField zero_spectral_field() const { return SpectralField(num_modes_, cplx{}); }
  State zero_state() const;
  SpectralState zero_spectral_state() const;

  void forward(std::span<const double> in, std::span<cplx> out) const;
  void backward(std::span<const cplx> in, std::span<double> out) const;
  SpectralField forward(const RealField& in) const;
  RealField backward(const SpectralField& in) const;

 private:
  static constexpr std::uint8_t kNyquist = 1;
  static constexpr std::uint8_t kTruncated = 2;
  static constexpr std::uint8_t kNyquistAxis0 = 4;

  struct Plans;

  int dim_;
  int n_;
  double half_length_;
  double wavenumber_max_ = 0.0;
  std::size_t num_points_;
  std::size_t num_modes_;
  std::vector<MultiIndex> index_;
  std::vector<std::array<double, 3>> xi_;
  std::vector<double> xi_norm_;
  std::vector<double> multiplicity_;
  std::vector<std::uint8_t> flags_;
  std::unique_ptr<Plans> plans_;
};

/// Number of FFT threads requested through EDP_THREADS (at least 1).
int configured_threads();

SpectralState transform_forward(const Grid& grid, const State& u);
State transform_backward(const Grid& grid, const SpectralState& u);

bool all_finite(std::span<const double> values);
void require_finite(const State& u, const char* what);

// ---------------------------------------------------------------------------
// Frequency cutoffs and projectors

/// C-infinity transition: 1 for s <= 0, 0 for s >= 1.
double smooth_step(double s);

struct CutoffPair {
  CutoffPair(const Grid& grid, double r1, double r_inf,
             std::optional<double> mollifier_radius = std::nullopt);

  double r1;
  double r_inf;
  double r0;  // outer radius of the mollifier support
  std::vector<double> low;        // chi_1
  std::vector<double> high;       // chi_inf = 1 - chi_1
  std::vector<double> mollifier;  // chi_0: 1 on |xi| <= r_inf, 0 beyond r0

  bool in_low_support(std::size_t q) const { return low[q] > 0.0; }
  bool in_high_support(std::size_t q) const { return high[q] > 0.0; }
};

void apply_multiplier(SpectralState& u, std::span<const double> multiplier);
/// Zeroes every mode where the multiplier vanishes (idempotent support mask).
void apply_support_mask(SpectralState& u, std::span<const double> multiplier);

State project_low(const Grid& grid, const CutoffPair& cut, const State& u);
State project_high(const Grid& grid, const CutoffPair& cut, const State& u);

// ---------------------------------------------------------------------------
// Norms

/// All multi-indices alpha with |alpha| <= k_max in the given dimension.
std::vector<MultiIndex> multi_indices(int dim, int k_max);

/// d^alpha of a field given by its coefficients; odd derivatives drop the
/// Nyquist plane of the differentiated axis.
RealField derivative(const Grid& grid, const SpectralField& coeffs, const MultiIndex& alpha);
SpectralField derivative_coefficients(const Grid& grid, const SpectralField& coeffs,
                                      const MultiIndex& alpha);

double l2_norm(const Grid& grid, std::span<const double> f);
double l2_norm(const Grid& grid, const State& u);
double l1_norm(const Grid& grid, std::span<const double> f);
double linf_norm(std::span<const double> f);
double linf_norm(const State& u);

/// Parseval: (2L)^d * sum over the full spectrum of |c_m|^2.
double spectral_l2_norm_squared(const Grid& grid, const SpectralField& coeffs);
double spectral_l2_norm(const Grid& grid, const SpectralState& u);

/// sum_{|alpha|<=k} xi^(2 alpha) for mode q.
double sobolev_multiplier(const Grid& grid, std::size_t q, int k);

double sobolev_norm(const Grid& grid, const RealField& f, int k);
double sobolev_norm(const Grid& grid, const State& u, int k);
double sobolev_norm(const Grid& grid, const SpectralState& u, int k);

/// w(x) = 1 + |x~|, x~ the representative of x in [-L, L)^dim.
RealField weight_function(const Grid& grid);

/// (sum_{|alpha|<=k} ||w^ell d^alpha f||_2^2)^(1/2)
double weighted_sobolev_norm(const Grid& grid, const RealField& f, int k, int ell);
double weighted_sobolev_norm(const Grid& grid, const State& u, int k, int ell);

double x1_norm(const Grid& grid, const RealField& a);
double y1_norm(const Grid& grid, const State& u);

struct WeightedNorms {
  std::map<std::pair<int, int>, double> hkl;
  double x1 = 0.0;
  double y1 = 0.0;
};

WeightedNorms weighted_norms(const Grid& grid, const State& u, int k_max, int ell_max);

}  // namespace edp
