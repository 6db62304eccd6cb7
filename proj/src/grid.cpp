#include "grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <numbers>
#include <string>

namespace edp {

// ---------------------------------------------------------------------------
// State arithmetic

namespace {

template <typename Field>
void check_same_shape(const std::vector<Field>& a, const std::vector<Field>& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::shape_mismatch, "state component count mismatch");
  for (std::size_t c = 0; c < a.size(); ++c)
    if (a[c].size() != b[c].size()) throw Error(ErrorKind::shape_mismatch, "state field size mismatch");
}

}  // namespace

State& State::operator+=(const State& other) {
  check_same_shape(comps, other.comps);
  for (std::size_t c = 0; c < comps.size(); ++c)
    for (std::size_t i = 0; i < comps[c].size(); ++i) comps[c][i] += other.comps[c][i];
  return *this;
}

State& State::operator-=(const State& other) {
  check_same_shape(comps, other.comps);
  for (std::size_t c = 0; c < comps.size(); ++c)
    for (std::size_t i = 0; i < comps[c].size(); ++i) comps[c][i] -= other.comps[c][i];
  return *this;
}

State& State::operator*=(double c) {
  for (auto& f : comps)
    for (auto& x : f) x *= c;
  return *this;
}

State operator+(State lhs, const State& rhs) { return lhs += rhs; }
State operator-(State lhs, const State& rhs) { return lhs -= rhs; }
State operator*(double c, State s) { return s *= c; }

SpectralState& SpectralState::operator+=(const SpectralState& other) {
  check_same_shape(comps, other.comps);
  for (std::size_t c = 0; c < comps.size(); ++c)
    for (std::size_t i = 0; i < comps[c].size(); ++i) comps[c][i] += other.comps[c][i];
  return *this;
}

SpectralState& SpectralState::operator-=(const SpectralState& other) {
  check_same_shape(comps, other.comps);
  for (std::size_t c = 0; c < comps.size(); ++c)
    for (std::size_t i = 0; i < comps[c].size(); ++i) comps[c][i] -= other.comps[c][i];
  return *this;
}

SpectralState& SpectralState::operator*=(double c) {
  for (auto& f : comps)
    for (auto& x : f) x *= c;
  return *this;
}

void SpectralState::axpy(double c, const SpectralState& other) {
  check_same_shape(comps, other.comps);
  for (std::size_t k = 0; k < comps.size(); ++k)
    for (std::size_t i = 0; i < comps[k].size(); ++i) comps[k][i] += c * other.comps[k][i];
}

void SpectralState::axpy(cplx c, const SpectralState& other) {
  check_same_shape(comps, other.comps);
  for (std::size_t k = 0; k < comps.size(); ++k)
    for (std::size_t i = 0; i < comps[k].size(); ++i) comps[k][i] += c * other.comps[k][i];
}

SpectralState operator+(SpectralState lhs, const SpectralState& rhs) { return lhs += rhs; }
SpectralState operator-(SpectralState lhs, const SpectralState& rhs) { return lhs -= rhs; }
SpectralState operator*(double c, SpectralState s) { return s *= c; }

// ---------------------------------------------------------------------------
// Grid

int configured_threads() {
  const char* env = std::getenv("EDP_THREADS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  long value = std::strtol(env, &end, 10);
  if (end == env || value < 1) return 1;
  return static_cast<int>(std::min<long>(value, 256));
}

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void init_fftw_threads() {
  static std::once_flag once;
  std::call_once(once, [] { fftw_init_threads(); });
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

struct Grid::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
  }
};

Grid::Grid(int dim, int n, double half_length) : dim_(dim), n_(n), half_length_(half_length) {
  if (dim < 1 || dim > 3) throw Error(ErrorKind::validation, "dim must be 1, 2 or 3");
  if (n < 8 || n % 2 != 0 || !is_power_of_two(n))
    throw Error(ErrorKind::validation, "n must be a power of two >= 8");
  if (!(half_length > 0.0) || !std::isfinite(half_length))
    throw Error(ErrorKind::validation, "half_length must be positive");

  num_points_ = 1;
  for (int d = 0; d < dim; ++d) num_points_ *= static_cast<std::size_t>(n);
  num_modes_ = num_points_ / static_cast<std::size_t>(n) * static_cast<std::size_t>(n / 2 + 1);

  const double k0 = fundamental();
  const int half = n / 2;
  const int third = n / 3;
  index_.resize(num_modes_);
  xi_.resize(num_modes_);
  xi_norm_.resize(num_modes_);
  multiplicity_.resize(num_modes_);
  flags_.resize(num_modes_);

  const int last = n / 2 + 1;
  for (std::size_t q = 0; q < num_modes_; ++q) {
    MultiIndex m{0, 0, 0};
    std::size_t rest = q;
    const int kl = static_cast<int>(rest % static_cast<std::size_t>(last));
    rest /= static_cast<std::size_t>(last);
    m[dim - 1] = kl;
    for (int d = dim - 2; d >= 0; --d) {
      int k = static_cast<int>(rest % static_cast<std::size_t>(n));
      rest /= static_cast<std::size_t>(n);
      m[d] = k < half ? k : k - n;
    }
    std::uint8_t flags = 0;
    std::array<double, 3> xi{0.0, 0.0, 0.0};
    double norm2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      int md = m[d];
      if (d == dim - 1 && md == half) md = -half;
      m[d] = md;
      if (md == -half) flags |= static_cast<std::uint8_t>(kNyquist | (kNyquistAxis0 << d));
      if (std::abs(md) > third) flags |= kTruncated;
      xi[d] = k0 * md;
      norm2 += xi[d] * xi[d];
    }
    index_[q] = m;
    xi_[q] = xi;
    xi_norm_[q] = std::sqrt(norm2);
    wavenumber_max_ = std::max(wavenumber_max_, xi_norm_[q]);
    multiplicity_[q] = (kl == 0 || kl == half) ? 1.0 : 2.0;
    flags_[q] = flags;
  }

  init_fftw_threads();
  plans_ = std::make_unique<Plans>();
  std::vector<int> dims(static_cast<std::size_t>(dim), n);
  std::vector<double> rbuf(num_points_);
  std::vector<cplx> cbuf(num_modes_);
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_plan_with_nthreads(configured_threads());
  plans_->r2c = fftw_plan_dft_r2c(dim, dims.data(), rbuf.data(),
                                  reinterpret_cast<fftw_complex*>(cbuf.data()),
                                  FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->c2r = fftw_plan_dft_c2r(dim, dims.data(), reinterpret_cast<fftw_complex*>(cbuf.data()),
                                  rbuf.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plans_->r2c || !plans_->c2r) throw Error(ErrorKind::validation, "FFT planning failed");
}

Grid::~Grid() = default;

double Grid::cell_volume() const { return std::pow(spacing(), dim_); }
double Grid::volume() const { return std::pow(2.0 * half_length_, dim_); }
double Grid::fundamental() const { return std::numbers::pi / half_length_; }

std::array<double, 3> Grid::position(std::size_t p) const {
  std::array<double, 3> x{0.0, 0.0, 0.0};
  const double h = spacing();
  const int half = n_ / 2;
  for (int d = dim_ - 1; d >= 0; --d) {
    int j = static_cast<int>(p % static_cast<std::size_t>(n_));
    p /= static_cast<std::size_t>(n_);
    x[d] = (j < half ? j : j - n_) * h;
  }
  return x;
}

double Grid::distance_to_origin(std::size_t p) const {
  auto x = position(p);
  return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
}

State Grid::zero_state() const {
  State s;
  s.comps.assign(static_cast<std::size_t>(dim_ + 1), zero_field());
  return s;
}

SpectralState Grid::zero_spectral_state() const {
  SpectralState s;
  s.comps.assign(static_cast<std::size_t>(dim_ + 1), zero_spectral_field());
  return s;
}

void Grid::forward(std::span<const double> in, std::span<cplx> out) const {
  if (in.size() != num_points_ || out.size() != num_modes_)
    throw Error(ErrorKind::shape_mismatch, "forward transform size mismatch");
  fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
  const double scale = 1.0 / static_cast<double>(num_points_);
  for (auto& c : out) c *= scale;
}

void Grid::backward(std::span<const cplx> in, std::span<double> out) const {
  if (in.size() != num_modes_ || out.size() != num_points_)
    throw Error(ErrorKind::shape_mismatch, "backward transform size mismatch");
  // c2r overwrites its input.
  thread_local std::vector<cplx> scratch;
  scratch.assign(in.begin(), in.end());
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
}

SpectralField Grid::forward(const RealField& in) const {
  SpectralField out(num_modes_);
  forward(in, out);
  return out;
}

RealField Grid::backward(const SpectralField& in) const {
  RealField out(num_points_);
  backward(in, out);
  return out;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

void require_finite(const State& u, const char* what) {
  for (const auto& f : u.comps)
    if (!all_finite(f)) throw Error(ErrorKind::invalid_field, std::string(what) + ": non-finite sample");
}

SpectralState transform_forward(const Grid& grid, const State& u) {
  require_finite(u, "transform_forward");
  SpectralState out;
  out.comps.reserve(u.comps.size());
  for (const auto& f : u.comps) out.comps.push_back(grid.forward(f));
  return out;
}

State transform_backward(const Grid& grid, const SpectralState& u) {
  State out;
  out.comps.reserve(u.comps.size());
  for (const auto& f : u.comps) out.comps.push_back(grid.backward(f));
  return out;
}

// ---------------------------------------------------------------------------
// Cutoffs

double smooth_step(double s) {
  if (s <= 0.0) return 1.0;
  if (s >= 1.0) return 0.0;
  const double q0 = std::exp(-1.0 / s);
  const double q1 = std::exp(-1.0 / (1.0 - s));
  return q1 / (q0 + q1);
}

CutoffPair::CutoffPair(const Grid& grid, double r1_, double r_inf_, std::optional<double> mollifier_radius)
    : r1(r1_), r_inf(r_inf_), r0(mollifier_radius.value_or(2.0 * r_inf_)) {
  if (!(r1 > 0.0 && r1 < r_inf && r_inf < 0.5))
    throw Error(ErrorKind::validation, "r1 < r_inf < 0.5 required");
  if (!(r0 > r_inf && r0 <= 2.0 * r_inf))
    throw Error(ErrorKind::validation, "mollifier radius must lie in (r_inf, 2 r_inf]");
  const std::size_t nm = grid.num_modes();
  low.resize(nm);
  high.resize(nm);
  mollifier.resize(nm);
  for (std::size_t q = 0; q < nm; ++q) {
    const double k = grid.wavenumber(q);
    low[q] = smooth_step((k - r1) / (r_inf - r1));
    high[q] = 1.0 - low[q];
    mollifier[q] = smooth_step((k - r_inf) / (r0 - r_inf));
  }
}

void apply_multiplier(SpectralState& u, std::span<const double> multiplier) {
  for (auto& f : u.comps) {
    if (f.size() != multiplier.size()) throw Error(ErrorKind::shape_mismatch, "multiplier size mismatch");
    for (std::size_t q = 0; q < f.size(); ++q) f[q] *= multiplier[q];
  }
}

void apply_support_mask(SpectralState& u, std::span<const double> multiplier) {
  for (auto& f : u.comps) {
    if (f.size() != multiplier.size()) throw Error(ErrorKind::shape_mismatch, "multiplier size mismatch");
    for (std::size_t q = 0; q < f.size(); ++q)
      if (multiplier[q] == 0.0) f[q] = cplx{};
  }
}

State project_low(const Grid& grid, const CutoffPair& cut, const State& u) {
  auto s = transform_forward(grid, u);
  apply_multiplier(s, cut.low);
  return transform_backward(grid, s);
}

State project_high(const Grid& grid, const CutoffPair& cut, const State& u) {
  auto s = transform_forward(grid, u);
  apply_multiplier(s, cut.high);
  return transform_backward(grid, s);
}

// ---------------------------------------------------------------------------
// Norms

std::vector<MultiIndex> multi_indices(int dim, int k_max) {
  std::vector<MultiIndex> out;
  const int hi1 = dim >= 2 ? k_max : 0;
  const int hi2 = dim >= 3 ? k_max : 0;
  for (int total = 0; total <= k_max; ++total)
    for (int a0 = total; a0 >= 0; --a0)
      for (int a1 = std::min(total - a0, hi1); a1 >= 0; --a1) {
        const int a2 = total - a0 - a1;
        if (a2 > hi2) continue;
        if (dim == 1 && (a1 != 0 || a2 != 0)) continue;
        out.push_back({a0, a1, a2});
      }
  return out;
}

SpectralField derivative_coefficients(const Grid& grid, const SpectralField& coeffs, const MultiIndex& alpha) {
  SpectralField out(coeffs.size());
  const int dim = grid.dim();
  for (std::size_t q = 0; q < coeffs.size(); ++q) {
    cplx factor{1.0, 0.0};
    bool drop = false;
    const auto& xi = grid.wavevector(q);
    for (int d = 0; d < dim; ++d) {
      if (alpha[d] == 0) continue;
      if (alpha[d] % 2 == 1 && grid.is_nyquist_axis(q, d)) {
        drop = true;
        break;
      }
      for (int r = 0; r < alpha[d]; ++r) factor *= cplx{0.0, xi[d]};
    }
    out[q] = drop ? cplx{} : factor * coeffs[q];
  }
  return out;
}

RealField derivative(const Grid& grid, const SpectralField& coeffs, const MultiIndex& alpha) {
  return grid.backward(derivative_coefficients(grid, coeffs, alpha));
}

double l2_norm(const Grid& grid, std::span<const double> f) {
  double s = 0.0;
  for (double x : f) s += x * x;
  return std::sqrt(s * grid.cell_volume());
}

double l2_norm(const Grid& grid, const State& u) {
  double s = 0.0;
  for (const auto& f : u.comps)
    for (double x : f) s += x * x;
  return std::sqrt(s * grid.cell_volume());
}

double l1_norm(const Grid& grid, std::span<const double> f) {
  double s = 0.0;
  for (double x : f) s += std::abs(x);
  return s * grid.cell_volume();
}

double linf_norm(std::span<const double> f) {
  double m = 0.0;
  for (double x : f) m = std::max(m, std::abs(x));
  return m;
}

double linf_norm(const State& u) {
  double m = 0.0;
  for (const auto& f : u.comps) m = std::max(m, linf_norm(f));
  return m;
}

double spectral_l2_norm_squared(const Grid& grid, const SpectralField& coeffs) {
  double s = 0.0;
  for (std::size_t q = 0; q < coeffs.size(); ++q) s += grid.multiplicity(q) * std::norm(coeffs[q]);
  return s * grid.volume();
}

double spectral_l2_norm(const Grid& grid, const SpectralState& u) {
  double s = 0.0;
  for (const auto& f : u.comps) s += spectral_l2_norm_squared(grid, f);
  return std::sqrt(s);
}

double sobolev_multiplier(const Grid& grid, std::size_t q, int k) {
  // sum over |alpha| <= k of prod xi_d^(2 alpha_d), built degree by degree:
  // h_j = complete homogeneous symmetric polynomial of degree j in xi_d^2.
  const auto& xi = grid.wavevector(q);
  const int dim = grid.dim();
  std::array<double, 8> h{};
  h.fill(0.0);
  h[0] = 1.0;
  for (int d = 0; d < dim; ++d) {
    const double s = xi[d] * xi[d];
    for (int j = 1; j <= k; ++j) h[j] += s * h[j - 1];
  }
  double total = 0.0;
  for (int j = 0; j <= k; ++j) total += h[j];
  return total;
}

double sobolev_norm(const Grid& grid, const RealField& f, int k) {
  if (k < 0 || k > 6) throw Error(ErrorKind::validation, "sobolev order must be in [0, 6]");
  auto c = grid.forward(f);
  double s = 0.0;
  for (std::size_t q = 0; q < c.size(); ++q)
    s += grid.multiplicity(q) * std::norm(c[q]) * sobolev_multiplier(grid, q, k);
  return std::sqrt(s * grid.volume());
}

double sobolev_norm(const Grid& grid, const State& u, int k) {
  double s = 0.0;
  for (const auto& f : u.comps) {
    const double n = sobolev_norm(grid, f, k);
    s += n * n;
  }
  return std::sqrt(s);
}

double sobolev_norm(const Grid& grid, const SpectralState& u, int k) {
  if (k < 0 || k > 6) throw Error(ErrorKind::validation, "sobolev order must be in [0, 6]");
  std::vector<double> mult(grid.num_modes());
  for (std::size_t q = 0; q < mult.size(); ++q)
    mult[q] = grid.multiplicity(q) * sobolev_multiplier(grid, q, k);
  double s = 0.0;
  for (const auto& f : u.comps)
    for (std::size_t q = 0; q < f.size(); ++q) s += mult[q] * std::norm(f[q]);
  return std::sqrt(s * grid.volume());
}

RealField weight_function(const Grid& grid) {
  RealField w(grid.num_points());
  for (std::size_t p = 0; p < w.size(); ++p) w[p] = 1.0 + grid.distance_to_origin(p);
  return w;
}

namespace {

double weighted_sum_squares(const RealField& f, const RealField& w, int ell) {
  double s = 0.0;
  for (std::size_t p = 0; p < f.size(); ++p) {
    const double x = std::pow(w[p], ell) * f[p];
    s += x * x;
  }
  return s;
}

// Accumulates sum_{|alpha|<=k} ||w^ell d^alpha f||^2 into table[k][ell].
void accumulate_weighted(const Grid& grid, const RealField& f, const RealField& w, int k_max, int ell_max,
                         std::vector<std::vector<double>>& table) {
  auto c = grid.forward(f);
  for (const auto& alpha : multi_indices(grid.dim(), k_max)) {
    const int order = alpha[0] + alpha[1] + alpha[2];
    RealField df = order == 0 ? f : derivative(grid, c, alpha);
    for (int ell = 0; ell <= ell_max; ++ell) {
      const double s = weighted_sum_squares(df, w, ell) * grid.cell_volume();
      for (int k = order; k <= k_max; ++k) table[static_cast<std::size_t>(k)][static_cast<std::size_t>(ell)] += s;
    }
  }
}

// Pointwise Euclidean magnitude of the full j-th derivative tensor (j = 1, 2).
RealField gradient_tensor_magnitude(const Grid& grid, const SpectralField& c, int order) {
  RealField mag(grid.num_points(), 0.0);
  const int dim = grid.dim();
  for (int i = 0; i < dim; ++i) {
    for (int k = 0; k < (order == 2 ? dim : 1); ++k) {
      MultiIndex alpha{0, 0, 0};
      alpha[i] += 1;
      if (order == 2) alpha[k] += 1;
      auto df = derivative(grid, c, alpha);
      for (std::size_t p = 0; p < mag.size(); ++p) mag[p] += df[p] * df[p];
    }
  }
  for (auto& x : mag) x = std::sqrt(x);
  return mag;
}

double weighted_sup(const RealField& f, const RealField& w, double power) {
  double m = 0.0;
  for (std::size_t p = 0; p < f.size(); ++p) m = std::max(m, std::pow(w[p], power) * std::abs(f[p]));
  return m;
}

double weighted_l2(const Grid& grid, const RealField& f, const RealField& w, double power) {
  double s = 0.0;
  for (std::size_t p = 0; p < f.size(); ++p) {
    const double x = std::pow(w[p], power) * f[p];
    s += x * x;
  }
  return std::sqrt(s * grid.cell_volume());
}

}  // namespace

double weighted_sobolev_norm(const Grid& grid, const RealField& f, int k, int ell) {
  if (k < 0 || k > 6 || ell < 0) throw Error(ErrorKind::validation, "invalid weighted norm indices");
  const auto w = weight_function(grid);
  if (k == 0) return std::sqrt(weighted_sum_squares(f, w, ell) * grid.cell_volume());
  std::vector<std::vector<double>> table(static_cast<std::size_t>(k + 1),
                                         std::vector<double>(static_cast<std::size_t>(ell + 1), 0.0));
  accumulate_weighted(grid, f, w, k, ell, table);
  return std::sqrt(table[static_cast<std::size_t>(k)][static_cast<std::size_t>(ell)]);
}

double weighted_sobolev_norm(const Grid& grid, const State& u, int k, int ell) {
  double s = 0.0;
  for (const auto& f : u.comps) {
    const double n = weighted_sobolev_norm(grid, f, k, ell);
    s += n * n;
  }
  return std::sqrt(s);
}

double x1_norm(const Grid& grid, const RealField& a) {
  const auto w = weight_function(grid);
  const double d = grid.dim();
  auto c = grid.forward(a);
  const auto grad = gradient_tensor_magnitude(grid, c, 1);
  const auto hess = gradient_tensor_magnitude(grid, c, 2);
  const double sup_part = weighted_sup(a, w, d - 2.0) + weighted_sup(grad, w, d - 1.0);
  const double l2_part = weighted_l2(grid, grad, w, 0.0) + weighted_l2(grid, hess, w, 1.0);
  return sup_part + l2_part;
}

double y1_norm(const Grid& grid, const State& u) {
  const auto w = weight_function(grid);
  const int dim = grid.dim();
  RealField vmag(grid.num_points(), 0.0);
  RealField grad_sq(grid.num_points(), 0.0);
  for (int i = 0; i < dim; ++i) {
    const auto& vi = u.v(i);
    for (std::size_t p = 0; p < vmag.size(); ++p) vmag[p] += vi[p] * vi[p];
    auto c = grid.forward(vi);
    auto g = gradient_tensor_magnitude(grid, c, 1);
    for (std::size_t p = 0; p < g.size(); ++p) grad_sq[p] += g[p] * g[p];
  }
  for (auto& x : vmag) x = std::sqrt(x);
  for (auto& x : grad_sq) x = std::sqrt(x);
  return weighted_sup(vmag, w, dim - 1.0) + weighted_l2(grid, vmag, w, 0.0) + weighted_l2(grid, grad_sq, w, 1.0);
}

WeightedNorms weighted_norms(const Grid& grid, const State& u, int k_max, int ell_max) {
  if (k_max < 0 || k_max > 6 || ell_max < 0) throw Error(ErrorKind::validation, "invalid weighted norm indices");
  require_finite(u, "weighted_norms");
  const auto w = weight_function(grid);
  std::vector<std::vector<double>> table(static_cast<std::size_t>(k_max + 1),
                                         std::vector<double>(static_cast<std::size_t>(ell_max + 1), 0.0));
  for (const auto& f : u.comps) accumulate_weighted(grid, f, w, k_max, ell_max, table);
  WeightedNorms out;
  for (int k = 0; k <= k_max; ++k)
    for (int ell = 0; ell <= ell_max; ++ell)
      out.hkl[{k, ell}] = std::sqrt(table[static_cast<std::size_t>(k)][static_cast<std::size_t>(ell)]);
  out.x1 = x1_norm(grid, u.a());
  out.y1 = y1_norm(grid, u);
  return out;
}

}  // namespace edp
