#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "sbn/frame_stack.hpp"

namespace sbn {

/// Weights and schedule for the three-term decomposition
///   min ||S||_1 + xi*||B||_* + gamma*||N||_F^2   s.t.  D = S + B + N
/// solved by alternating closed-form updates with an augmented-Lagrangian
/// penalty mu that grows by rho each iteration.
///
/// Unset (auto) fields resolve against the data:
///   xi    -> sqrt(max(Nc, f))
///   gamma -> 1 / (4 * sigma_hat), sigma_hat estimated from the median
///            absolute deviation of temporal first differences; effectively
///            unbounded when the data is noise-free
///   mu0   -> 1.25 / sigma_1(D)
struct SolverConfig {
    std::optional<double> xi;      ///< sparse-vs-low-rank weight, >= 0
    std::optional<double> gamma;   ///< noise weight, >= 0
    double rho = 1.5;              ///< penalty growth factor, > 0
    std::optional<double> mu0;     ///< initial penalty, > 0
    double tol = 1e-3;             ///< stop when relative error drops below
    int max_iter = 100;
    std::optional<Eigen::MatrixXd> confidence_map;  ///< optional Nc x f weights in [0,1]

    void validate() const;
};

struct IterationRecord {
    int iter = 0;          ///< 1-based
    double mu = 0.0;       ///< penalty used during this iteration
    double rel_error = 0.0;
    double objective = 0.0;  ///< ||S||_1 + xi*||B||_* + gamma*||N||_F^2
};

struct DecompositionResult {
    Eigen::MatrixXd shadow;      ///< S
    Eigen::MatrixXd background;  ///< B
    Eigen::MatrixXd noise;       ///< N
    Eigen::MatrixXd multiplier;  ///< final Lagrange multiplier Y
    std::vector<IterationRecord> trace;
    bool converged = false;
    /// The weights the run actually used after resolving auto fields.
    double xi_used = 0.0, gamma_used = 0.0, mu0_used = 0.0;
};

/// Elementwise shrinkage sign(q) * max(|q| - eps, 0). Rejects eps < 0.
Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& m, double eps);

/// Singular value thresholding: SVD, shrink the singular values by eps,
/// reconstruct. Never increases rank.
Eigen::MatrixXd singular_value_threshold(const Eigen::MatrixXd& m, double eps);

/// B-step: singular_value_threshold(D - S - N + Y/mu, xi/mu).
Eigen::MatrixXd update_background(const Eigen::MatrixXd& D, const Eigen::MatrixXd& S,
                                  const Eigen::MatrixXd& N, const Eigen::MatrixXd& Y,
                                  double mu, double xi);

/// S-step: soft_threshold(D - B - N + Y/mu, 1/mu).
Eigen::MatrixXd update_shadow(const Eigen::MatrixXd& D, const Eigen::MatrixXd& B,
                              const Eigen::MatrixXd& N, const Eigen::MatrixXd& Y, double mu);

/// N-step: (1 + 2*gamma/mu)^-1 * (D - B - S + Y/mu).
Eigen::MatrixXd update_noise(const Eigen::MatrixXd& D, const Eigen::MatrixXd& B,
                             const Eigen::MatrixXd& S, const Eigen::MatrixXd& Y, double mu,
                             double gamma);

/// Dual step: Y + mu * (D - S - B - N).
Eigen::MatrixXd update_multiplier(const Eigen::MatrixXd& Y, double mu, const Eigen::MatrixXd& D,
                                  const Eigen::MatrixXd& S, const Eigen::MatrixXd& B,
                                  const Eigen::MatrixXd& N);

/// Penalty schedule: rho * mu.
double update_penalty(double mu, double rho);

/// ||D - (B + S + N)||_F / ||D||_F. Rejects ||D||_F = 0.
double relative_error(const Eigen::MatrixXd& D, const Eigen::MatrixXd& S,
                      const Eigen::MatrixXd& B, const Eigen::MatrixXd& N);

/// Runs the full alternating scheme (B, S, N, Y, mu per iteration) until the
/// relative error drops below cfg.tol or cfg.max_iter is reached.
DecompositionResult decompose(const MatricizedVideo& mat, const SolverConfig& cfg = {});

/// Robust noise-level estimate from temporal first differences
/// (median absolute deviation / 0.6745 / sqrt(2)). Zero for static data.
double estimate_noise_sigma(const Eigen::MatrixXd& mat);

/// Fraction of singular-value mass in the top ceil(k/100 * min(Nc,f))
/// singular values; k is a percentage in (0, 100].
double singular_value_cdf(const MatricizedVideo& mat, double k);

/// Convenience: CDF evaluated at integer percentages 1..100.
std::vector<double> singular_value_cdf_curve(const MatricizedVideo& mat);

}  // namespace sbn
