#include "qdion/qd_emitter.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qdion/errors.hpp"
#include "qdion/quadrature.hpp"
#include "qdion/units.hpp"

namespace qdion {

namespace {

using cd = std::complex<double>;
constexpr cd kI{0.0, 1.0};

void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError("EmitterParams: " + what);
}

// Eigen-decomposition of the Bloch generator at one detuning.
struct BlochModes {
  BlochSteadyState ss;
  Eigen::Vector3cd lambda;  // MHz
  Eigen::Matrix3cd vectors;
  Eigen::Matrix3cd inverse;

  explicit BlochModes(const EmitterParams& p) : ss(steady_state(p)) {
    Eigen::ComplexEigenSolver<Eigen::Matrix3cd> solver(bloch_generator(p));
    lambda = solver.eigenvalues();
    vectors = solver.eigenvectors();
    inverse = vectors.inverse();
  }

  // Stationary (<s->, <s+>, rho_ee).
  Eigen::Vector3cd stationary() const {
    return {ss.coherence, std::conj(ss.coherence), cd(ss.excited_population)};
  }
};

// Realizations of the emitter detuning: the nominal one, or Gauss-Hermite
// nodes over a Gaussian distribution of nu_QD.
struct Realization {
  EmitterParams params;
  double weight;
};

std::vector<Realization> realizations(const EmitterParams& p) {
  if (p.wandering_sigma <= 0.0) return {{p, 1.0}};
  const auto rule = gauss_hermite_normal(kWanderingNodes);
  std::vector<Realization> out;
  out.reserve(rule.nodes.size());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    EmitterParams q = p;
    q.delta = p.delta + p.wandering_sigma * rule.nodes[i];
    q.wandering_sigma = 0.0;
    out.push_back({q, rule.weights[i]});
  }
  return out;
}

double term_density(const LorentzianTerm& t, double nu) {
  return (t.residue / (kI * nu - t.pole)).real() / std::numbers::pi;
}

// Integral of a term over [a, b]. i nu - pole stays in the right half plane,
// so the principal logarithm is continuous along the path.
double term_integral(const LorentzianTerm& t, double a, double b) {
  const cd lb = std::log(kI * b - t.pole);
  const cd la = std::log(kI * a - t.pole);
  return (-kI * t.residue * (lb - la)).real() / std::numbers::pi;
}

// Excited population at tau after starting in the ground state.
double population_from_ground(const BlochModes& m, double tau_us) {
  const Eigen::Vector3cd vss = m.stationary();
  const Eigen::Vector3cd c = m.inverse * (-vss);
  cd rho = vss(2);
  for (int k = 0; k < 3; ++k) {
    rho += m.vectors(2, k) * std::exp(units::two_pi * m.lambda(k) * tau_us) * c(k);
  }
  return rho.real();
}

}  // namespace

void EmitterParams::validate() const {
  require(std::isfinite(gamma_rad) && gamma_rad > 0.0, "gamma_rad must be > 0");
  require(std::isfinite(s) && s >= 0.0, "s must be >= 0");
  require(std::isfinite(delta), "delta must be finite");
  require(std::isfinite(dephasing_coeff) && dephasing_coeff >= 0.0,
          "dephasing_coeff must be >= 0");
  require(!dephasing_fixed || (std::isfinite(*dephasing_fixed) && *dephasing_fixed >= 0.0),
          "dephasing_fixed must be >= 0");
  require(std::isfinite(wandering_sigma) && wandering_sigma >= 0.0,
          "wandering_sigma must be >= 0");
  require(psb_fraction >= 0.0 && psb_fraction < 1.0, "psb_fraction must lie in [0, 1)");
}

double EmitterParams::dephasing() const {
  return dephasing_fixed ? *dephasing_fixed : s * dephasing_coeff;
}

double EmitterParams::coherence_decay() const { return 0.5 * gamma_rad + dephasing(); }

double EmitterParams::rabi() const { return gamma_rad * std::sqrt(0.5 * s); }

double EmitterParams::generalized_rabi() const {
  const double omega = rabi();
  return std::sqrt(omega * omega + delta * delta);
}

Eigen::Matrix3cd bloch_generator(const EmitterParams& p) {
  const double g2 = p.coherence_decay();
  const double omega = p.rabi();
  Eigen::Matrix3cd m;
  // clang-format off
  m << -(g2 + kI * p.delta), 0.0,                  kI * omega,
       0.0,                  -(g2 - kI * p.delta), -kI * omega,
       0.5 * kI * omega,     -0.5 * kI * omega,    -p.gamma_rad;
  // clang-format on
  return m;
}

Eigen::Vector3cd bloch_drive(const EmitterParams& p) {
  const double omega = p.rabi();
  return {-0.5 * kI * omega, 0.5 * kI * omega, 0.0};
}

BlochSteadyState steady_state(const EmitterParams& p) {
  p.validate();
  const double gamma = p.gamma_rad;
  const double g2 = p.coherence_decay();
  const double omega_sq = p.rabi() * p.rabi();
  const double lorentz = g2 * g2 + p.delta * p.delta;
  const double denom = gamma * lorentz + omega_sq * g2;
  BlochSteadyState out;
  out.excited_population = 0.5 * omega_sq * g2 / denom;
  // 1 - 2 rho_ee = Gamma (g2^2 + delta^2) / denom
  const double inversion = gamma * lorentz / denom;
  out.coherence = -0.5 * kI * p.rabi() * inversion / (g2 + kI * p.delta);
  return out;
}

double coherent_fraction(const EmitterParams& p) {
  p.validate();
  const double gamma = p.gamma_rad;
  const double g2 = p.coherence_decay();
  const double omega_sq = p.rabi() * p.rabi();
  const double lorentz = g2 * g2 + p.delta * p.delta;
  const double denom = gamma * lorentz + omega_sq * g2;
  return gamma * gamma * lorentz / (2.0 * g2 * denom);
}

double EmissionSpectrum::density_at(double nu) const {
  double sum = 0.0;
  for (const auto& t : terms) sum += term_density(t, nu);
  return photon_rate * sum;
}

double EmissionSpectrum::incoherent_weight() const {
  return trapezoid(grid, incoherent_density) + tail_weight;
}

double EmissionSpectrum::grid_spacing_near(double nu) const {
  if (grid.size() < 2) return 0.0;
  auto it = std::lower_bound(grid.begin(), grid.end(), nu);
  std::size_t i = static_cast<std::size_t>(it - grid.begin());
  i = std::clamp<std::size_t>(i, 1, grid.size() - 1);
  return grid[i] - grid[i - 1];
}

std::vector<double> default_spectrum_grid(const EmitterParams& p, std::size_t points,
                                          double span_factor) {
  if (points < 2) throw ParameterError("spectrum grid needs at least two points");
  const double half =
      span_factor * std::max(p.generalized_rabi(), p.gamma_rad) + 5.0 * p.wandering_sigma;
  std::vector<double> grid(points);
  const double step = 2.0 * half / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) grid[i] = -half + step * static_cast<double>(i);
  return grid;
}

EmissionSpectrum emission_spectrum(const EmitterParams& p) {
  p.validate();
  return emission_spectrum(p, default_spectrum_grid(p));
}

EmissionSpectrum emission_spectrum(const EmitterParams& p, std::span<const double> grid) {
  p.validate();
  if (grid.size() < 2) throw ParameterError("spectrum grid needs at least two points");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw ParameterError("spectrum grid must be strictly increasing");
  }

  EmissionSpectrum out;
  out.grid.assign(grid.begin(), grid.end());
  out.psb_fraction = p.psb_fraction;
  out.photon_rate = units::angular(p.gamma_rad);

  for (const auto& [q, w] : realizations(p)) {
    const BlochModes modes(q);
    const cd x = modes.ss.coherence;
    const double rho = modes.ss.excited_population;
    out.total_rate += w * out.photon_rate * rho;
    out.coherent_weight += w * out.photon_rate * std::norm(x);

    // Fluctuation of (<s-(t) s-(0)>, <s+(t) s-(0)>, <s+s-(t) s-(0)>) at t = 0.
    const Eigen::Vector3cd du0(-x * x, cd(rho - std::norm(x)), -rho * x);
    const Eigen::Vector3cd c = modes.inverse * du0;
    for (int k = 0; k < 3; ++k) {
      out.terms.push_back({w * modes.vectors(1, k) * c(k), modes.lambda(k)});
    }
  }

  out.incoherent_density.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.incoherent_density[i] = std::max(0.0, out.density_at(grid[i]));
  }

  const double incoherent_total = out.total_rate - out.coherent_weight;
  double in_grid = 0.0;
  for (const auto& t : out.terms) in_grid += term_integral(t, grid.front(), grid.back());
  in_grid *= out.photon_rate;
  out.tail_weight = std::max(0.0, incoherent_total - in_grid);
  out.captured_fraction = incoherent_total > 0.0 ? in_grid / incoherent_total : 1.0;
  out.truncated = out.captured_fraction < 0.999;
  return out;
}

std::vector<double> g2(const EmitterParams& p, std::span<const double> tau_ns,
                       std::optional<double> irf_sigma_ns) {
  p.validate();
  if (irf_sigma_ns && !(*irf_sigma_ns > 0.0)) {
    throw ParameterError("g2: detector IRF sigma must be > 0");
  }
  struct Weighted {
    BlochModes modes;
    double weight;
  };
  std::vector<Weighted> parts;
  double mean_rho = 0.0;
  for (const auto& [q, w] : realizations(p)) {
    parts.push_back({BlochModes(q), w});
    mean_rho += w * parts.back().modes.ss.excited_population;
  }
  if (!(mean_rho > 0.0)) throw ParameterError("g2: undefined without drive (s = 0)");

  auto bare = [&](double tau) {
    const double t_us = units::ns_to_us(std::abs(tau));
    double num = 0.0;
    for (const auto& [m, w] : parts) {
      num += w * m.ss.excited_population * population_from_ground(m, t_us);
    }
    return num / (mean_rho * mean_rho);
  };

  std::vector<double> out(tau_ns.size());
  if (!irf_sigma_ns) {
    for (std::size_t i = 0; i < tau_ns.size(); ++i) out[i] = bare(tau_ns[i]);
    return out;
  }

  const double sigma = *irf_sigma_ns;
  constexpr int kHalf = 600;
  const double du = 6.0 * sigma / kHalf;
  std::vector<double> kernel(2 * kHalf + 1);
  double norm = 0.0;
  for (int j = -kHalf; j <= kHalf; ++j) {
    const double u = j * du;
    kernel[j + kHalf] = std::exp(-0.5 * u * u / (sigma * sigma));
    norm += kernel[j + kHalf];
  }
  for (std::size_t i = 0; i < tau_ns.size(); ++i) {
    double acc = 0.0;
    for (int j = -kHalf; j <= kHalf; ++j) acc += kernel[j + kHalf] * bare(tau_ns[i] - j * du);
    out[i] = acc / norm;
  }
  return out;
}

double radiative_lifetime_ns(const EmitterParams& p) {
  p.validate();
  return 1e3 / units::angular(p.gamma_rad);
}

std::vector<double> lifetime_trace(const EmitterParams& p, std::span<const double> t_ns,
                                   double initial_population) {
  const double t1 = radiative_lifetime_ns(p);
  if (initial_population < 0.0 || initial_population > 1.0) {
    throw ParameterError("lifetime_trace: initial population must lie in [0, 1]");
  }
  std::vector<double> out(t_ns.size());
  for (std::size_t i = 0; i < t_ns.size(); ++i) {
    out[i] = initial_population * std::exp(-t_ns[i] / t1);
  }
  return out;
}

}  // namespace qdion
