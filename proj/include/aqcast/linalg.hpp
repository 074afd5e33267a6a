#pragma once

#include <Eigen/Dense>
#include <string_view>

#include "aqcast/rng.hpp"

namespace aqcast {

/// Gaussian in canonical form: precision P and linear term b, so that the mean
/// is P^{-1} b and the covariance is P^{-1}.
struct CanonicalGaussian {
  Eigen::MatrixXd precision;
  Eigen::VectorXd linear;

  Eigen::VectorXd mean() const;
  Eigen::MatrixXd covariance() const;
};

/// One draw from N(P^{-1} b, P^{-1}) via the Cholesky factor of P.
/// Throws NumericalError naming `what` when P is not positive definite.
Eigen::VectorXd draw_canonical(const CanonicalGaussian& g, Rng& rng, std::string_view what);

/// Inverse-Wishart draw with density proportional to
/// |S|^{-(df+p+1)/2} exp(-tr(scale S^{-1}) / 2); mean scale / (df - p - 1).
/// Bartlett decomposition of the Wishart(scale^{-1}, df) precision.
Eigen::MatrixXd draw_inverse_wishart(const Eigen::MatrixXd& scale, double df, Rng& rng);

/// Inverse of a symmetric positive definite matrix; throws NumericalError otherwise.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, std::string_view what);

bool is_spd(const Eigen::MatrixXd& m);

}  // namespace aqcast
