#pragma once

#include "dipex/em_forward.hpp"
#include "dipex/lstsq.hpp"
#include "dipex/scan_model.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace dipex {

struct SolverConfig {
  /// Minimum RE decrease per sweep below which the iteration stops.
  double epsilon = 1e-4;
  int max_iterations = 500;
  double rcond = 1e-10;

  void validate() const;
};

struct TraceEntry {
  int iteration = 0;
  double re1 = 0.0;
  double re2 = 0.0;
  double re = 0.0;
};

/// RE per sweep. `initial` is iteration 0 (the constant-phase start);
/// `history` holds sweeps 1..K, and its length is what max_iterations caps.
struct IterationTrace {
  TraceEntry initial;
  std::vector<TraceEntry> history;
};

enum class StopReason { Epsilon, Increase, Cap };

struct FitResult {
  Eigen::VectorXcd moments;
  /// Errors of the returned moments (re = re1 for a single surface).
  double re1 = 0.0;
  double re2 = 0.0;
  double re = 0.0;
  IterationTrace trace;
  bool converged = false;
  StopReason stop = StopReason::Cap;
  std::vector<std::string> warnings;
  bool two_surface = true;
};

/// sqrt( sum (|u_meas|-|u_fit|)^2 + (|v_meas|-|v_fit|)^2 / sum |u_meas|^2 + |v_meas|^2 )
double relative_error(const FieldDataset &measured, const FieldDataset &predicted);
/// Same metric on interleaved magnitude vectors.
double relative_error(const Eigen::VectorXd &measured, const Eigen::VectorXd &predicted);
/// Metric of |field| against measured magnitudes.
double relative_error(const Eigen::VectorXd &measured, const Eigen::VectorXcd &field);

/// measured[i] * exp(j arg(computed[i])), with arg(0) := 0.
Eigen::VectorXcd enforce_magnitude(const Eigen::VectorXcd &computed,
                                   const Eigen::VectorXd &measured);

/// Least squares against magnitudes taken as zero-phase fields.
Eigen::VectorXcd init_moments(const TransferMatrix &t, const Eigen::VectorXd &mags,
                              double rcond = 1e-10);

/// Two-surface back-and-forth iteration. Throws IllConditionedError when
/// either transfer matrix is rank deficient.
FitResult back_and_forth_two(const TransferMatrix &t1, const TransferMatrix &t2,
                             const Eigen::VectorXd &mags1, const Eigen::VectorXd &mags2,
                             const SolverConfig &cfg);

FitResult back_and_forth_single(const TransferMatrix &t1, const Eigen::VectorXd &mags1,
                                const SolverConfig &cfg);

/// A problem instance: one or two magnitude datasets plus the environment.
struct Problem {
  std::vector<FieldDataset> surfaces;
  Environment env;

  void validate() const;
};

/// Builds the transfer matrices for `layout` and dispatches to the one- or
/// two-surface iteration.
FitResult solve_layout(std::span<const DipoleSlot> layout, const Problem &problem,
                       const SolverConfig &cfg);

std::vector<Dipole> attach_moments(std::span<const DipoleSlot> layout,
                                   const Eigen::VectorXcd &moments);

/// Forward fields of the model, phases included. Magnitude-only data fixes
/// these phases only up to one global offset.
FieldDataset retrieve_phase(std::span<const Dipole> dipoles, const ScanSurface &surface,
                            const Environment &env);

struct PhaseAlignment {
  double alpha = 0.0; ///< radians, added to phases_b
  double rms = 0.0;   ///< weighted circular RMS residual, radians
};

/// alpha maximizing sum w cos(a - b - alpha) and the weighted RMS of the
/// wrapped residual a - b - alpha.
PhaseAlignment align_global_phase(std::span<const double> phases_a,
                                  std::span<const double> phases_b,
                                  std::span<const double> weights);

double wrap_phase(double radians);

} // namespace dipex
