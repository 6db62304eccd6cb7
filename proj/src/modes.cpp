#include "modes.hpp"

#include <array>
#include <cmath>
#include <unordered_map>

namespace edp {

namespace {

constexpr cplx kI{0.0, 1.0};

cplx expm1_complex(cplx z) {
  if (z.imag() == 0.0) return {std::expm1(z.real()), 0.0};
  if (std::abs(z) < 0.5) {
    cplx term = z;
    cplx sum = z;
    for (int k = 2; k < 30; ++k) {
      term *= z / static_cast<double>(k);
      sum += term;
    }
    return sum;
  }
  return std::exp(z) - 1.0;
}

// phi_1(z) = (e^z - 1)/z, phi_2(z) = (e^z - 1 - z)/z^2
cplx phi1(cplx z) {
  if (std::abs(z) < 0.5) {
    cplx term{1.0, 0.0};
    cplx sum = term;
    for (int k = 1; k < 30; ++k) {
      term *= z / static_cast<double>(k + 1);
      sum += term;
    }
    return sum;
  }
  return expm1_complex(z) / z;
}

cplx phi2(cplx z) {
  if (std::abs(z) < 0.5) {
    cplx term{0.5, 0.0};
    cplx sum = term;
    for (int k = 1; k < 30; ++k) {
      term *= z / static_cast<double>(k + 2);
      sum += term;
    }
    return sum;
  }
  return (expm1_complex(z) - z) / (z * z);
}

double norm_of(std::span<const double> xi) {
  double s = 0.0;
  for (double x : xi) s += x * x;
  return std::sqrt(s);
}

ModeMatrix dense_function(const ModeMatrix& generator, ModeFunction f, double tau) {
  // generator = -A (or the 2x2 block analogue); returns f(generator).
  const auto n = generator.rows();
  const ModeMatrix id = ModeMatrix::Identity(n, n);
  switch (f) {
    case ModeFunction::propagator:
      return matrix_exponential(tau * generator);
    case ModeFunction::resolvent:
      return (id - matrix_exponential(tau * generator)).partialPivLu().inverse();
    case ModeFunction::segment_constant: {
      ModeMatrix aug = ModeMatrix::Zero(2 * n, 2 * n);
      aug.topLeftCorner(n, n) = tau * generator;
      aug.topRightCorner(n, n) = id;
      return tau * matrix_exponential(aug).topRightCorner(n, n);
    }
    case ModeFunction::segment_linear: {
      ModeMatrix aug = ModeMatrix::Zero(3 * n, 3 * n);
      aug.block(0, 0, n, n) = tau * generator;
      aug.block(0, n, n, n) = id;
      aug.block(n, 2 * n, n, n) = id;
      return tau * matrix_exponential(aug).block(0, 2 * n, n, n);
    }
  }
  return id;
}

}  // namespace

ModeMatrix symbol_matrix(std::span<const double> xi) {
  const auto d = static_cast<Eigen::Index>(xi.size());
  ModeMatrix m = ModeMatrix::Zero(d + 1, d + 1);
  for (Eigen::Index i = 0; i < d; ++i) {
    m(0, i + 1) = kI * xi[static_cast<std::size_t>(i)];
    m(i + 1, 0) = kI * xi[static_cast<std::size_t>(i)];
    m(i + 1, i + 1) = 1.0;
  }
  return m;
}

EigenvaluePair branch_eigenvalues(double k) {
  const double disc = 1.0 - 4.0 * k * k;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    // -2k^2/(1+s) avoids the cancellation in (-1 + s)/2 for small k.
    return {cplx{k == 0.0 ? 0.0 : -2.0 * k * k / (1.0 + s), 0.0}, cplx{-0.5 * (1.0 + s), 0.0}};
  }
  const double s = std::sqrt(-disc);
  return {cplx{-0.5, 0.5 * s}, cplx{-0.5, -0.5 * s}};
}

bool is_degenerate(double k, double eps_deg) { return std::abs(1.0 - 4.0 * k * k) < eps_deg; }

ModeDecomposition decompose_mode(std::span<const double> xi, double eps_deg) {
  const double k = norm_of(xi);
  if (k == 0.0) throw Error(ErrorKind::zero_wavevector, "decompose_mode: xi = 0 has no projection formula");
  ModeDecomposition out;
  const auto ev = branch_eigenvalues(k);
  out.lambda_plus = ev.plus;
  out.lambda_minus = ev.minus;
  if (is_degenerate(k, eps_deg)) {
    out.degenerate_flag = true;
    return out;
  }
  const auto d = static_cast<Eigen::Index>(xi.size());
  Eigen::VectorXd xv(d);
  for (Eigen::Index i = 0; i < d; ++i) xv(i) = xi[static_cast<std::size_t>(i)];
  const Eigen::MatrixXd outer = xv * xv.transpose() / (k * k);

  out.pi0 = ModeMatrix::Zero(d + 1, d + 1);
  out.pi0.bottomRightCorner(d, d) = (Eigen::MatrixXd::Identity(d, d) - outer).cast<cplx>();

  const cplx gap = ev.plus - ev.minus;
  auto branch = [&](cplx diag_a, cplx diag_v, double sign) {
    ModeMatrix p = ModeMatrix::Zero(d + 1, d + 1);
    p(0, 0) = diag_a;
    for (Eigen::Index i = 0; i < d; ++i) {
      p(0, i + 1) = -kI * xv(i);
      p(i + 1, 0) = -kI * xv(i);
    }
    p.bottomRightCorner(d, d) = diag_v * outer.cast<cplx>();
    return ModeMatrix((sign / gap) * p);
  };
  out.pi_plus = branch(-ev.minus, ev.plus, 1.0);
  out.pi_minus = branch(-ev.plus, ev.minus, -1.0);
  return out;
}

ModeMatrix matrix_exponential(const ModeMatrix& a) {
  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;
  const auto n = a.rows();
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > theta13) s = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  const ModeMatrix as = a / std::ldexp(1.0, s);
  const ModeMatrix id = ModeMatrix::Identity(n, n);
  const ModeMatrix a2 = as * as;
  const ModeMatrix a4 = a2 * a2;
  const ModeMatrix a6 = a4 * a2;
  const ModeMatrix u =
      as * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const ModeMatrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  ModeMatrix r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < s; ++i) r = r * r;
  return r;
}

ModeMatrix propagator_matrix(std::span<const double> xi, double t, double eps_deg) {
  const auto d = static_cast<Eigen::Index>(xi.size());
  const double k = norm_of(xi);
  if (k == 0.0) {
    ModeMatrix m = ModeMatrix::Identity(d + 1, d + 1) * std::exp(-t);
    m(0, 0) = 1.0;
    return m;
  }
  if (is_degenerate(k, eps_deg)) return matrix_exponential(-t * symbol_matrix(xi));
  const auto dec = decompose_mode(xi, eps_deg);
  return std::exp(-t) * dec.pi0 + std::exp(t * dec.lambda_plus) * dec.pi_plus +
         std::exp(t * dec.lambda_minus) * dec.pi_minus;
}

ModeMatrix resolvent_matrix(std::span<const double> xi, double period, double eps_deg) {
  const auto d = static_cast<Eigen::Index>(xi.size());
  const double k = norm_of(xi);
  if (k == 0.0) {
    ModeMatrix m = ModeMatrix::Identity(d + 1, d + 1) / (-std::expm1(-period));
    m(0, 0) = 0.0;
    return m;
  }
  if (is_degenerate(k, eps_deg)) {
    const ModeMatrix id = ModeMatrix::Identity(d + 1, d + 1);
    return (id - matrix_exponential(-period * symbol_matrix(xi))).partialPivLu().inverse();
  }
  const auto dec = decompose_mode(xi, eps_deg);
  auto coef = [&](cplx lambda) { return mode_function_value(ModeFunction::resolvent, period, lambda); };
  return coef(dec.lambda0) * dec.pi0 + coef(dec.lambda_plus) * dec.pi_plus +
         coef(dec.lambda_minus) * dec.pi_minus;
}

cplx mode_function_value(ModeFunction f, double tau, cplx lambda) {
  switch (f) {
    case ModeFunction::propagator: return std::exp(tau * lambda);
    case ModeFunction::resolvent: return -1.0 / expm1_complex(tau * lambda);
    case ModeFunction::segment_constant: return tau * phi1(tau * lambda);
    case ModeFunction::segment_linear: return tau * phi2(tau * lambda);
  }
  return {};
}

Block2 longitudinal_block(double k, ModeFunction f, double tau, double eps_deg, cplx shift) {
  if (is_degenerate(k, eps_deg)) {
    ModeMatrix gen(2, 2);
    gen << shift, -kI * k, -kI * k, -1.0 + shift;
    const ModeMatrix r = dense_function(gen, f, tau);
    return {r(0, 0), r(0, 1), r(1, 0), r(1, 1)};
  }
  const auto ev = branch_eigenvalues(k);
  const cplx gap = ev.plus - ev.minus;
  cplx fp = mode_function_value(f, tau, ev.plus + shift);
  const cplx fm = mode_function_value(f, tau, ev.minus + shift);
  if (f == ModeFunction::resolvent && k == 0.0 && shift == cplx{}) fp = 0.0;  // mass-mode gauge
  // P+ = [[-l-, -ik], [-ik, l+]] / gap,  P- = [[l+, ik], [ik, -l-]] / gap
  const cplx ik = kI * k;
  return {(fp * (-ev.minus) + fm * ev.plus) / gap, (fp * (-ik) + fm * ik) / gap,
          (fp * (-ik) + fm * ik) / gap, (fp * ev.plus + fm * (-ev.minus)) / gap};
}

ModeSubset support_subset(const Grid& grid, std::span<const double> multiplier) {
  ModeSubset out;
  for (std::size_t q = 0; q < grid.num_modes(); ++q)
    if (multiplier[q] != 0.0 && !grid.is_nyquist(q)) out.modes.push_back(q);
  return out;
}

SpectralState gather(const ModeSubset& subset, const SpectralState& full) {
  SpectralState out;
  out.comps.resize(full.comps.size());
  for (std::size_t c = 0; c < full.comps.size(); ++c) {
    out.comps[c].resize(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) out.comps[c][i] = full.comps[c][subset.modes[i]];
  }
  return out;
}

SpectralState scatter(const Grid& grid, const ModeSubset& subset, const SpectralState& sub) {
  SpectralState out;
  out.comps.assign(sub.comps.size(), grid.zero_spectral_field());
  for (std::size_t c = 0; c < sub.comps.size(); ++c)
    for (std::size_t i = 0; i < subset.size(); ++i) out.comps[c][subset.modes[i]] = sub.comps[c][i];
  return out;
}

ModeOperator::ModeOperator(const Grid& grid, ModeFunction f, double tau, double eps_deg, cplx shift)
    : function_(f), tau_(tau) {
  build(grid, f, tau, eps_deg, shift);
}

ModeOperator::ModeOperator(const Grid& grid, const ModeSubset& subset, ModeFunction f, double tau,
                           double eps_deg, cplx shift)
    : function_(f), tau_(tau), modes_(subset.modes) {
  build(grid, f, tau, eps_deg, shift);
}

void ModeOperator::build(const Grid& grid, ModeFunction f, double tau, double eps_deg, cplx shift) {
  const bool all = modes_.empty();
  const std::size_t count = all ? grid.num_modes() : modes_.size();
  block_.resize(count);
  transverse_.resize(count);
  const cplx transverse_value = mode_function_value(f, tau, cplx{-1.0, 0.0} + shift);
  const double k0 = grid.fundamental();
  std::unordered_map<long, Block2> cache;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t q = all ? i : modes_[i];
    if (grid.is_nyquist(q)) {
      block_[i] = {cplx{}, cplx{}, cplx{}, cplx{}};
      transverse_[i] = cplx{};
      continue;
    }
    const auto& m = grid.index(q);
    const long key =
        static_cast<long>(m[0]) * m[0] + static_cast<long>(m[1]) * m[1] + static_cast<long>(m[2]) * m[2];
    auto it = cache.find(key);
    if (it == cache.end())
      it = cache.emplace(key, longitudinal_block(k0 * std::sqrt(static_cast<double>(key)), f, tau, eps_deg, shift))
               .first;
    block_[i] = it->second;
    transverse_[i] = transverse_value;
  }
}

namespace {

template <bool Accumulate>
void apply_blocks(const Grid& grid, const std::vector<std::size_t>& modes, const std::vector<Block2>& block,
                  const std::vector<cplx>& transverse, const SpectralState& in, SpectralState& out) {
  const int dim = grid.dim();
  const std::size_t count = block.size();
  if (in.comps.size() != static_cast<std::size_t>(dim + 1) || in.comps[0].size() != count)
    throw Error(ErrorKind::shape_mismatch, "mode operator: state does not match operator layout");
  std::array<cplx, 3> v{};
  std::array<double, 3> unit{};
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t q = modes.empty() ? i : modes[i];
    const double k = grid.wavenumber(q);
    const auto& xi = grid.wavevector(q);
    if (k > 0.0) {
      for (int j = 0; j < dim; ++j) unit[j] = xi[j] / k;
    } else {
      unit = {1.0, 0.0, 0.0};
    }
    const cplx a = in.comps[0][i];
    cplx vl{};
    for (int j = 0; j < dim; ++j) {
      v[j] = in.comps[1 + j][i];
      vl += unit[j] * v[j];
    }
    const auto& b = block[i];
    const cplx a_new = b[0] * a + b[1] * vl;
    const cplx vl_new = b[2] * a + b[3] * vl;
    const cplx t = transverse[i];
    if constexpr (Accumulate) {
      out.comps[0][i] += a_new;
      for (int j = 0; j < dim; ++j) out.comps[1 + j][i] += t * (v[j] - unit[j] * vl) + unit[j] * vl_new;
    } else {
      out.comps[0][i] = a_new;
      for (int j = 0; j < dim; ++j) out.comps[1 + j][i] = t * (v[j] - unit[j] * vl) + unit[j] * vl_new;
    }
  }
}

}  // namespace

void ModeOperator::apply(const Grid& grid, SpectralState& u) const {
  apply_blocks<false>(grid, modes_, block_, transverse_, u, u);
}

void ModeOperator::apply_add(const Grid& grid, const SpectralState& u, SpectralState& out) const {
  apply_blocks<true>(grid, modes_, block_, transverse_, u, out);
}

// ---------------------------------------------------------------------------

cplx kernel_symbol(std::span<const double> xi, double period, const KernelSelector& sel, double eps_deg) {
  const auto d = static_cast<int>(xi.size());
  if (sel.row < 1 || sel.row > d + 1 || sel.col < 1 || sel.col > d + 1)
    throw Error(ErrorKind::validation, "kernel selector index out of range");
  const int r = sel.row - 1;
  const int c = sel.col - 1;
  switch (sel.family) {
    case KernelFamily::e1_branch: {
      if (norm_of(xi) == 0.0) return {};
      const auto dec = decompose_mode(xi, eps_deg);
      if (dec.degenerate_flag)
        throw Error(ErrorKind::degenerate_mode, "branch kernel symbol is singular in the degenerate band");
      const ModeMatrix* pi = nullptr;
      cplx lambda;
      if (sel.branch == 1) {
        pi = &dec.pi_plus;
        lambda = dec.lambda_plus;
      } else if (sel.branch == -1) {
        pi = &dec.pi_minus;
        lambda = dec.lambda_minus;
      } else if (sel.branch == 0) {
        pi = &dec.pi0;
        lambda = dec.lambda0;
      } else {
        throw Error(ErrorKind::validation, "branch must be +1, 0 or -1");
      }
      return mode_function_value(ModeFunction::resolvent, period, lambda) * (*pi)(r, c);
    }
    case KernelFamily::e1_full: {
      const ModeMatrix m = propagator_matrix(xi, sel.t, eps_deg) * resolvent_matrix(xi, period, eps_deg) *
                           propagator_matrix(xi, period - sel.s, eps_deg);
      return m(r, c);
    }
    case KernelFamily::e2: {
      if (sel.t < sel.s) throw Error(ErrorKind::validation, "E2 requires t >= tau");
      return propagator_matrix(xi, sel.t - sel.s, eps_deg)(r, c);
    }
  }
  return {};
}

namespace {

// Mean of the symbol over the Fourier cell centred at xi = 0 (midpoint rule
// with an even number of points per axis, so xi = 0 itself is never hit).
cplx zero_cell_average(const Grid& grid, double period, const KernelSelector& sel, double eps_deg) {
  constexpr int kPoints = 32;
  const int dim = grid.dim();
  const double k0 = grid.fundamental();
  const int total = static_cast<int>(std::lround(std::pow(kPoints, dim)));
  cplx sum{};
  std::array<double, 3> xi{};
  for (int idx = 0; idx < total; ++idx) {
    int rest = idx;
    for (int j = 0; j < dim; ++j) {
      xi[j] = k0 * ((rest % kPoints + 0.5) / kPoints - 0.5);
      rest /= kPoints;
    }
    sum += kernel_symbol(std::span<const double>(xi.data(), static_cast<std::size_t>(dim)), period, sel, eps_deg);
  }
  return sum / static_cast<double>(total);
}

}  // namespace

RealField kernel_field(const Grid& grid, const CutoffPair& cut, double period, const KernelSelector& sel,
                       double eps_deg) {
  SpectralField coeffs(grid.num_modes(), cplx{});
  const double scale = 1.0 / grid.volume();
  const int dim = grid.dim();
  for (std::size_t q = 0; q < grid.num_modes(); ++q) {
    if (cut.mollifier[q] == 0.0 || grid.is_nyquist(q)) continue;
    if (grid.wavenumber(q) == 0.0 && sel.family != KernelFamily::e2) {
      // The E1 symbols are singular at the origin; the cell average keeps the
      // Fourier sum a consistent quadrature of the whole-space integral.
      coeffs[q] = cut.mollifier[q] * scale * zero_cell_average(grid, period, sel, eps_deg);
      continue;
    }
    const auto& xi = grid.wavevector(q);
    coeffs[q] = cut.mollifier[q] * scale *
                kernel_symbol(std::span<const double>(xi.data(), static_cast<std::size_t>(dim)), period, sel, eps_deg);
  }
  return grid.backward(coeffs);
}

}  // namespace edp
