#include "dipex/inverse_solver.hpp"

#include "dipex/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dipex {
namespace {

constexpr double kTwoPi = 2.0 * constants::pi;

// sqrt(re^2 + im^2); std::abs goes through hypot, which dominates the
// iteration cost.
inline double magnitude(Complex z) { return std::sqrt(std::norm(z)); }

Eigen::VectorXcd as_complex(const Eigen::VectorXd &v) { return v.cast<Complex>(); }

void check_rows(const TransferMatrix &t, const Eigen::VectorXd &mags, const char *name) {
  if (t.rows() != mags.size())
    throw ConfigError(std::string(name) + ": magnitude count does not match transfer-matrix rows");
}

struct Sweep {
  const Eigen::MatrixXcd &t;
  const LeastSquares &ls;
  const Eigen::VectorXd &mags;
};

// One half-sweep: predict, score, enforce, re-solve. Updates `moments` and
// returns the RE of the prediction made before the update.
double half_sweep(const Sweep &s, Eigen::VectorXcd &moments) {
  const Eigen::VectorXcd field = s.t * moments;
  const double re = relative_error(s.mags, field);
  moments = s.ls.solve(enforce_magnitude(field, s.mags));
  return re;
}

} // namespace

void SolverConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw ConfigError("solver epsilon must be positive");
  if (max_iterations < 1)
    throw ConfigError("solver max_iterations must be >= 1");
  if (!(rcond > 0.0) || rcond >= 1.0)
    throw ConfigError("solver rcond must lie in (0, 1)");
}

double relative_error(const Eigen::VectorXd &measured, const Eigen::VectorXd &predicted) {
  if (measured.size() != predicted.size())
    throw MetricError("relative error: vectors differ in length");
  const double denom = measured.squaredNorm();
  if (!(denom > 0.0))
    throw MetricError("relative error undefined for an all-zero measurement");
  return std::sqrt((measured - predicted).squaredNorm() / denom);
}

double relative_error(const Eigen::VectorXd &measured, const Eigen::VectorXcd &field) {
  if (measured.size() != field.size())
    throw MetricError("relative error: vectors differ in length");
  double num = 0.0;
  double denom = 0.0;
  for (Eigen::Index i = 0; i < measured.size(); ++i) {
    const double diff = measured[i] - magnitude(field[i]);
    num += diff * diff;
    denom += measured[i] * measured[i];
  }
  if (!(denom > 0.0))
    throw MetricError("relative error undefined for an all-zero measurement");
  return std::sqrt(num / denom);
}

double relative_error(const FieldDataset &measured, const FieldDataset &predicted) {
  if (!measured.surface.same_grid(predicted.surface))
    throw MetricError("relative error: datasets are sampled on different grids");
  return relative_error(measured.interleaved_magnitudes(), predicted.interleaved_magnitudes());
}

Eigen::VectorXcd enforce_magnitude(const Eigen::VectorXcd &computed,
                                   const Eigen::VectorXd &measured) {
  if (computed.size() != measured.size())
    throw Error("enforce_magnitude: length mismatch");
  Eigen::VectorXcd out(computed.size());
  for (Eigen::Index i = 0; i < computed.size(); ++i) {
    const double a = magnitude(computed[i]);
    out[i] = a > 0.0 ? measured[i] * (computed[i] / a) : Complex(measured[i], 0.0);
  }
  return out;
}

Eigen::VectorXcd init_moments(const TransferMatrix &t, const Eigen::VectorXd &mags, double rcond) {
  check_rows(t, mags, "init_moments");
  return lstsq_complex(t.entries, as_complex(mags), rcond);
}

// RE changes smaller than this are rounding, not a real increase.
constexpr double kRoundoffRe = 1e-12;

FitResult back_and_forth_two(const TransferMatrix &t1, const TransferMatrix &t2,
                             const Eigen::VectorXd &mags1, const Eigen::VectorXd &mags2,
                             const SolverConfig &cfg) {
  cfg.validate();
  if (t1.cols() != t2.cols())
    throw ConfigError("transfer matrices must share the dipole count");
  check_rows(t1, mags1, "surface #1");
  check_rows(t2, mags2, "surface #2");

  const LeastSquares ls1(t1.entries, cfg.rcond);
  const LeastSquares ls2(t2.entries, cfg.rcond);
  const Sweep s1{t1.entries, ls1, mags1};
  const Sweep s2{t2.entries, ls2, mags2};

  FitResult fit;
  fit.two_surface = true;
  Eigen::VectorXcd d = ls2.solve(as_complex(mags2));
  {
    const double re1 = relative_error(mags1, Eigen::VectorXcd(t1.entries * d));
    const double re2 = relative_error(mags2, Eigen::VectorXcd(t2.entries * d));
    fit.trace.initial = TraceEntry{0, re1, re2, 0.5 * (re1 + re2)};
  }

  double previous = fit.trace.initial.re;
  fit.stop = StopReason::Cap;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    const double re1 = half_sweep(s1, d);
    const double re2 = half_sweep(s2, d);
    const double re = 0.5 * (re1 + re2);
    fit.trace.history.push_back(TraceEntry{it, re1, re2, re});
    const double decrease = previous - re;
    previous = re;
    if (decrease <= cfg.epsilon) {
      if (decrease < -kRoundoffRe) {
        fit.stop = StopReason::Increase;
        fit.warnings.push_back("RE increased at iteration " + std::to_string(it));
      } else {
        fit.stop = StopReason::Epsilon;
      }
      break;
    }
  }
  fit.converged = fit.stop != StopReason::Cap;
  fit.moments = d;
  fit.re1 = relative_error(mags1, Eigen::VectorXcd(t1.entries * d));
  fit.re2 = relative_error(mags2, Eigen::VectorXcd(t2.entries * d));
  fit.re = 0.5 * (fit.re1 + fit.re2);
  return fit;
}

FitResult back_and_forth_single(const TransferMatrix &t1, const Eigen::VectorXd &mags1,
                                const SolverConfig &cfg) {
  cfg.validate();
  check_rows(t1, mags1, "surface #1");
  const LeastSquares ls1(t1.entries, cfg.rcond);
  const Sweep s1{t1.entries, ls1, mags1};

  FitResult fit;
  fit.two_surface = false;
  Eigen::VectorXcd d = ls1.solve(as_complex(mags1));
  {
    const double re1 = relative_error(mags1, Eigen::VectorXcd(t1.entries * d));
    fit.trace.initial = TraceEntry{0, re1, 0.0, re1};
  }

  double previous = fit.trace.initial.re;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    const double re1 = half_sweep(s1, d);
    fit.trace.history.push_back(TraceEntry{it, re1, 0.0, re1});
    const double decrease = previous - re1;
    previous = re1;
    if (decrease <= cfg.epsilon) {
      if (decrease < -kRoundoffRe) {
        fit.stop = StopReason::Increase;
        fit.warnings.push_back("RE increased at iteration " + std::to_string(it));
      } else {
        fit.stop = StopReason::Epsilon;
      }
      break;
    }
  }
  fit.converged = fit.stop != StopReason::Cap;
  fit.moments = d;
  fit.re1 = relative_error(mags1, Eigen::VectorXcd(t1.entries * d));
  fit.re2 = 0.0;
  fit.re = fit.re1;
  return fit;
}

void Problem::validate() const {
  if (surfaces.empty() || surfaces.size() > 2)
    throw ConfigError("a problem needs one or two surfaces");
  env.validate();
  for (const auto &s : surfaces) {
    s.validate();
    if (std::abs(s.frequency_hz - env.frequency_hz) > 1e-9 * env.frequency_hz)
      throw ConfigError("dataset '" + s.surface.label() +
                        "' frequency does not match the environment frequency");
  }
}

FitResult solve_layout(std::span<const DipoleSlot> layout, const Problem &problem,
                       const SolverConfig &cfg) {
  if (layout.empty())
    throw ConfigError("layout must contain at least one dipole");
  const TransferMatrix t1 = build_transfer_matrix(layout, problem.surfaces[0].surface, problem.env);
  const Eigen::VectorXd m1 = problem.surfaces[0].interleaved_magnitudes();
  if (problem.surfaces.size() == 1)
    return back_and_forth_single(t1, m1, cfg);
  const TransferMatrix t2 = build_transfer_matrix(layout, problem.surfaces[1].surface, problem.env);
  return back_and_forth_two(t1, t2, m1, problem.surfaces[1].interleaved_magnitudes(), cfg);
}

std::vector<Dipole> attach_moments(std::span<const DipoleSlot> layout,
                                   const Eigen::VectorXcd &moments) {
  if (static_cast<Eigen::Index>(layout.size()) != moments.size())
    throw ConfigError("moment count does not match the layout");
  std::vector<Dipole> out;
  out.reserve(layout.size());
  for (std::size_t i = 0; i < layout.size(); ++i)
    out.push_back(Dipole{layout[i].kind, layout[i].position, moments[static_cast<Eigen::Index>(i)]});
  return out;
}

FieldDataset retrieve_phase(std::span<const Dipole> dipoles, const ScanSurface &surface,
                            const Environment &env) {
  return forward_fields(dipoles, surface, env);
}

double wrap_phase(double radians) {
  double w = std::remainder(radians, kTwoPi);
  if (w <= -constants::pi)
    w += kTwoPi;
  return w;
}

PhaseAlignment align_global_phase(std::span<const double> phases_a,
                                  std::span<const double> phases_b,
                                  std::span<const double> weights) {
  const std::size_t n = phases_a.size();
  if (phases_b.size() != n || weights.size() != n)
    throw ConfigError("align_global_phase: length mismatch");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw ConfigError("align_global_phase: weights must be finite and >= 0");
    wsum += w;
  }
  if (!(wsum > 0.0))
    throw ConfigError("align_global_phase: weights are all zero");

  std::vector<double> diff(n);
  Complex resultant(0.0, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = wrap_phase(phases_a[i] - phases_b[i]);
    resultant += weights[i] * std::polar(1.0, diff[i]);
  }

  auto rms_at = [&](double alpha) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = wrap_phase(diff[i] - alpha);
      acc += weights[i] * r * r;
    }
    return std::sqrt(acc / wsum);
  };

  if (std::abs(resultant) > 1e-12 * wsum) {
    const double alpha = std::arg(resultant);
    return PhaseAlignment{alpha, rms_at(alpha)};
  }

  // Zero resultant: every alpha maximizes the cosine objective. Take the one
  // with the smallest circular RMS, i.e. the least-squares circular mean over
  // all branch cuts of the sorted differences.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return diff[a] < diff[b]; });
  double weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    weighted += weights[i] * diff[i];
  PhaseAlignment best{wrap_phase(weighted / wsum), rms_at(weighted / wsum)};
  for (std::size_t c = 0; c < n; ++c) {
    weighted += weights[order[c]] * kTwoPi;
    const double alpha = wrap_phase(weighted / wsum);
    const double rms = rms_at(alpha);
    if (rms < best.rms - 1e-15)
      best = PhaseAlignment{alpha, rms};
  }
  return best;
}

} // namespace dipex
