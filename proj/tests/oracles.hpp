#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the FFT or the per-mode operator code.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <vector>

#include "grid.hpp"
#include "modes.hpp"
#include "nonlinear.hpp"

namespace oracle {

using edp::cplx;
using edp::Grid;
using edp::MultiIndex;
using edp::RealField;
using edp::State;

/// exp(m) by scaling, a 30-term Taylor series and repeated squaring.
inline Eigen::MatrixXcd taylor_expm(const Eigen::MatrixXcd& m) {
  const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  double scale = 1.0;
  while (norm * scale > 0.25) {
    scale *= 0.5;
    ++squarings;
  }
  const Eigen::MatrixXcd a = m * scale;
  Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(m.rows(), m.cols());
  Eigen::MatrixXcd sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  for (int k = 0; k < squarings; ++k) sum = sum * sum;
  return sum;
}

/// -A_xi written out directly.
inline Eigen::MatrixXcd minus_symbol(const std::vector<double>& xi) {
  const int d = static_cast<int>(xi.size());
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d + 1, d + 1);
  const cplx i{0.0, 1.0};
  for (int j = 0; j < d; ++j) {
    m(0, 1 + j) = -i * xi[j];
    m(1 + j, 0) = -i * xi[j];
    m(1 + j, 1 + j) = -1.0;
  }
  return m;
}

/// Composite Gauss-Legendre (5 points) on [0, tau].
inline Eigen::MatrixXcd quadrature(const std::function<Eigen::MatrixXcd(double)>& f, double tau, int panels) {
  static const double x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                              0.9061798459386640};
  static const double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                              0.2369268850561891};
  Eigen::MatrixXcd sum;
  const double h = tau / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * h;
    for (int k = 0; k < 5; ++k) {
      Eigen::MatrixXcd v = f(mid + 0.5 * h * x[k]) * (0.5 * h * w[k]);
      if (sum.size() == 0)
        sum = v;
      else
        sum += v;
    }
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Dense Fourier series on small grids.

/// Full-spectrum coefficients on the cube m in [-n/2, n/2)^dim, flattened
/// row-major. The grid supplies only sample positions.
class DenseFourier {
 public:
  explicit DenseFourier(const Grid& grid) : grid_(grid), dim_(grid.dim()), n_(grid.n()) {
    count_ = 1;
    for (int k = 0; k < dim_; ++k) count_ *= static_cast<std::size_t>(n_);
    modes_.resize(count_);
    for (std::size_t f = 0; f < count_; ++f) {
      std::size_t r = f;
      MultiIndex m{0, 0, 0};
      for (int k = dim_ - 1; k >= 0; --k) {
        m[k] = static_cast<int>(r % n_) - n_ / 2;
        r /= n_;
      }
      modes_[f] = m;
    }
    // phase table e^{-i xi.x}
    phase_.resize(count_ * grid.num_points());
    const double k0 = std::numbers::pi / grid.half_length();
    for (std::size_t f = 0; f < count_; ++f)
      for (std::size_t p = 0; p < grid.num_points(); ++p) {
        const auto x = grid.position(p);
        double arg = 0.0;
        for (int k = 0; k < dim_; ++k) arg += k0 * modes_[f][k] * x[k];
        phase_[f * grid.num_points() + p] = std::polar(1.0, -arg);
      }
  }

  std::size_t size() const { return count_; }
  const MultiIndex& mode(std::size_t f) const { return modes_[f]; }
  double xi(std::size_t f, int axis) const { return std::numbers::pi / grid_.half_length() * modes_[f][axis]; }

  std::size_t flat(MultiIndex m) const {
    std::size_t f = 0;
    for (int k = 0; k < dim_; ++k) {
      int mk = ((m[k] + n_ / 2) % n_ + n_) % n_;
      f = f * n_ + static_cast<std::size_t>(mk);
    }
    return f;
  }

  std::vector<cplx> analyze(const RealField& u) const {
    const std::size_t np = grid_.num_points();
    std::vector<cplx> c(count_);
    for (std::size_t f = 0; f < count_; ++f) {
      cplx s{};
      for (std::size_t p = 0; p < np; ++p) s += u[p] * phase_[f * np + p];
      c[f] = s / static_cast<double>(np);
    }
    return c;
  }

  RealField synthesize(const std::vector<cplx>& c) const {
    const std::size_t np = grid_.num_points();
    RealField u(np, 0.0);
    for (std::size_t p = 0; p < np; ++p) {
      cplx s{};
      for (std::size_t f = 0; f < count_; ++f) s += c[f] * std::conj(phase_[f * np + p]);
      u[p] = s.real();
    }
    return u;
  }

  /// 2/3 rule: keep |m_k| <= n/3 on every axis.
  void truncate(std::vector<cplx>& c) const {
    for (std::size_t f = 0; f < count_; ++f)
      for (int k = 0; k < dim_; ++k)
        if (3 * std::abs(modes_[f][k]) > n_) {
          c[f] = cplx{};
          break;
        }
  }

  std::vector<cplx> partial(const std::vector<cplx>& c, int axis) const {
    std::vector<cplx> out(count_);
    for (std::size_t f = 0; f < count_; ++f)
      out[f] = std::abs(modes_[f][axis]) == n_ / 2 ? cplx{} : cplx{0.0, xi(f, axis)} * c[f];
    return out;
  }

  /// Cyclic convolution (the exact spectrum of a grid product).
  std::vector<cplx> convolve(const std::vector<cplx>& a, const std::vector<cplx>& b) const {
    std::vector<cplx> out(count_);
    for (std::size_t f = 0; f < count_; ++f) {
      if (a[f] == cplx{}) continue;
      for (std::size_t g = 0; g < count_; ++g) {
        if (b[g] == cplx{}) continue;
        MultiIndex m{0, 0, 0};
        for (int k = 0; k < dim_; ++k) m[k] = modes_[f][k] + modes_[g][k];
        out[flat(m)] += a[f] * b[g];
      }
    }
    return out;
  }

  /// Multiplies by a radial multiplier given as a function of |xi|.
  void multiply(std::vector<cplx>& c, const std::function<double(double)>& chi) const {
    for (std::size_t f = 0; f < count_; ++f) {
      double r2 = 0.0;
      for (int k = 0; k < dim_; ++k) r2 += xi(f, k) * xi(f, k);
      c[f] *= chi(std::sqrt(r2));
    }
  }

 private:
  const Grid& grid_;
  int dim_;
  int n_;
  std::size_t count_;
  std::vector<MultiIndex> modes_;
  std::vector<cplx> phase_;
};

/// Spectrum of B[u~]u by brute-force convolution: u~ and u are dealiased,
/// g3 = e^{a~} - 1 for the quadratic law, coefficient fields are dealiased,
/// and the result is dealiased.
inline std::vector<std::vector<cplx>> brute_force_B(const DenseFourier& F, const State& u_tilde, const State& u,
                                                    const std::function<double(double)>& g3_of_a) {
  const int d = u.dim();
  auto dealiased = [&](const RealField& f) {
    auto c = F.analyze(f);
    F.truncate(c);
    return c;
  };
  std::vector<std::vector<cplx>> vt(d);
  for (int i = 0; i < d; ++i) vt[i] = dealiased(u_tilde.v(i));
  const auto at = dealiased(u_tilde.a());
  RealField g3 = F.synthesize(at);
  for (auto& x : g3) x = g3_of_a(x);
  const auto g3c = dealiased(g3);

  std::vector<std::vector<cplx>> uc(d + 1);
  for (int c = 0; c <= d; ++c) uc[c] = dealiased(u.comps[c]);

  std::vector<std::vector<cplx>> out(d + 1, std::vector<cplx>(F.size()));
  auto add = [](std::vector<cplx>& acc, const std::vector<cplx>& x) {
    for (std::size_t f = 0; f < acc.size(); ++f) acc[f] += x[f];
  };
  for (int j = 0; j < d; ++j) {
    const auto da = F.partial(uc[0], j);
    add(out[0], F.convolve(vt[j], da));
    add(out[1 + j], F.convolve(g3c, da));
    for (int i = 0; i < d; ++i) add(out[1 + i], F.convolve(vt[j], F.partial(uc[1 + i], j)));
  }
  for (auto& c : out) F.truncate(c);
  return out;
}

// ---------------------------------------------------------------------------

/// Smooth band-limited random field: random coefficients on |m_k| <= kmax,
/// made real by symmetrization, scaled to max abs = amplitude.
inline RealField smooth_random_field(const Grid& grid, int kmax, double amplitude, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  const int d = grid.dim();
  const double k0 = std::numbers::pi / grid.half_length();
  struct Wave {
    std::array<int, 3> m;
    double re, im;
  };
  std::vector<Wave> waves;
  for (int a = -kmax; a <= kmax; ++a)
    for (int b = (d > 1 ? -kmax : 0); b <= (d > 1 ? kmax : 0); ++b)
      for (int c = (d > 2 ? -kmax : 0); c <= (d > 2 ? kmax : 0); ++c) waves.push_back({{a, b, c}, nd(rng), nd(rng)});
  RealField f(grid.num_points(), 0.0);
  for (std::size_t p = 0; p < f.size(); ++p) {
    const auto x = grid.position(p);
    double s = 0.0;
    for (const auto& w : waves) {
      const double arg = k0 * (w.m[0] * x[0] + w.m[1] * x[1] + w.m[2] * x[2]);
      s += w.re * std::cos(arg) + w.im * std::sin(arg);
    }
    f[p] = s;
  }
  double mx = 0.0;
  for (double x : f) mx = std::max(mx, std::abs(x));
  for (auto& x : f) x *= amplitude / mx;
  return f;
}

inline State smooth_random_state(const Grid& grid, int kmax, double amplitude, std::mt19937_64& rng) {
  State u;
  for (int c = 0; c <= grid.dim(); ++c) u.comps.push_back(smooth_random_field(grid, kmax, amplitude, rng));
  return u;
}

inline double max_abs_diff(const RealField& a, const RealField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const State& a, const State& b) {
  double m = 0.0;
  for (std::size_t c = 0; c < a.comps.size(); ++c) m = std::max(m, max_abs_diff(a.comps[c], b.comps[c]));
  return m;
}

}  // namespace oracle
