#pragma once

// Reference calculations shared by the unit tests and the acceptance binary.
// They work directly with the 2x2 density matrix and a Lindblad master
// equation, independent of the library's Bloch-vector formulation.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

using cd = std::complex<double>;
using Mat = std::array<std::array<cd, 2>, 2>;  // index 0 = g, 1 = e

struct TwoLevel {
  double gamma;    // radiative decay, MHz
  double omega;    // Rabi frequency, MHz
  double delta;    // nu_QD - nu_L, MHz
  double dephase;  // pure dephasing of the coherence, MHz
};

inline TwoLevel from_saturation(double gamma, double s, double delta, double dephase) {
  return {gamma, gamma * std::sqrt(s / 2.0), delta, dephase};
}

// d rho / dt in rad/us for rho in the rotating frame of the laser.
inline Mat lindblad(const TwoLevel& q, const Mat& r) {
  constexpr double tp = 2.0 * std::numbers::pi;
  const cd i{0.0, 1.0};
  const double G = tp * q.gamma;
  const double D = tp * q.delta;
  const double W = tp * q.omega / 2.0;
  const double K = tp * 2.0 * q.dephase;  // Lindblad rate of |e><e|
  // H = D |e><e| + W (|e><g| + |g><e|)
  Mat h{};
  h[1][1] = D;
  h[0][1] = W;
  h[1][0] = W;
  Mat out{};
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      cd comm = 0.0;
      for (int c = 0; c < 2; ++c) comm += h[a][c] * r[c][b] - r[a][c] * h[c][b];
      out[a][b] = -i * comm;
    }
  }
  // sigma- = |g><e|
  out[0][0] += G * r[1][1];
  out[1][1] -= G * r[1][1];
  out[0][1] -= 0.5 * (G + K) * r[0][1];
  out[1][0] -= 0.5 * (G + K) * r[1][0];
  return out;
}

inline Mat axpy(const Mat& x, double a, const Mat& y) {
  Mat out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out[i][j] = x[i][j] + a * y[i][j];
  return out;
}

inline Mat rk4_step(const TwoLevel& q, const Mat& r, double dt) {
  const Mat k1 = lindblad(q, r);
  const Mat k2 = lindblad(q, axpy(r, dt / 2, k1));
  const Mat k3 = lindblad(q, axpy(r, dt / 2, k2));
  const Mat k4 = lindblad(q, axpy(r, dt, k3));
  Mat out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      out[i][j] = r[i][j] + dt / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]);
  return out;
}

inline double residual(const TwoLevel& q, const Mat& r) {
  const Mat d = lindblad(q, r);
  double m = 0.0;
  for (const auto& row : d)
    for (const auto& v : row) m = std::max(m, std::abs(v));
  return m;
}

// Integrates from the ground state until |d rho / dt| < tol (rad/us units).
inline Mat steady_state(const TwoLevel& q, double tol = 1e-10) {
  Mat r{};
  r[0][0] = 1.0;
  const double dt = 2e-5;
  for (int n = 0; n < 2'000'000; ++n) {
    r = rk4_step(q, r, dt);
    if (n % 100 == 0 && residual(q, r) < tol) break;
  }
  return r;
}

inline double excited(const Mat& r) { return r[1][1].real(); }
// <sigma-> = Tr(rho |g><e|) = rho_eg
inline cd coherence(const Mat& r) { return r[1][0]; }

// Incoherent spectrum in photons/us/MHz at each nu, from the regression
// theorem: <s+(tau) s-(0)> = Tr[s+ exp(L tau)(s- rho_ss)], Fourier
// transformed numerically with Simpson's rule.
inline std::vector<double> spectrum(const TwoLevel& q, const std::vector<double>& nu,
                                    double t_max = 0.08, double dt = 4e-6) {
  constexpr double tp = 2.0 * std::numbers::pi;
  const Mat ss = steady_state(q, 1e-12);
  const cd x = coherence(ss);
  // X = s- rho: (s- rho)_{ab} = delta_{a g} rho_{e b}
  Mat X{};
  X[0][0] = ss[1][0];
  X[0][1] = ss[1][1];
  const int n = 2 * static_cast<int>(std::round(t_max / dt / 2.0));
  std::vector<cd> corr(n + 1);
  for (int k = 0; k <= n; ++k) {
    // Tr(s+ X) = X_{e g}... s+ = |e><g| so Tr(s+ X) = X_{g e}
    corr[k] = X[0][1] - std::norm(x);
    X = rk4_step(q, X, dt);
  }
  std::vector<double> out(nu.size());
  for (std::size_t j = 0; j < nu.size(); ++j) {
    cd acc = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      acc += w * corr[k] * std::exp(cd(0.0, -tp * nu[j] * k * dt));
    }
    acc *= dt / 3.0;
    out[j] = tp * q.gamma * 2.0 * acc.real();
  }
  return out;
}

// Excited population at tau after starting in the ground state.
inline std::vector<double> population_from_ground(const TwoLevel& q, const std::vector<double>& t_us,
                                                  double dt = 2e-6) {
  std::vector<double> out;
  Mat r{};
  r[0][0] = 1.0;
  double t = 0.0;
  for (double target : t_us) {
    while (t + dt <= target + 1e-15) {
      r = rk4_step(q, r, dt);
      t += dt;
    }
    if (target > t) {
      r = rk4_step(q, r, target - t);
      t = target;
    }
    out.push_back(excited(r));
  }
  return out;
}

}  // namespace oracle
