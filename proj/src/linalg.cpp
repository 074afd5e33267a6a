#include "aqcast/linalg.hpp"

#include <string>

#include "aqcast/errors.hpp"

namespace aqcast {
namespace {

Eigen::LLT<Eigen::MatrixXd> factor(const Eigen::MatrixXd& m, std::string_view what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success || !m.allFinite()) {
    throw NumericalError("matrix is not positive definite in " + std::string(what));
  }
  return llt;
}

}  // namespace

Eigen::VectorXd CanonicalGaussian::mean() const {
  return factor(precision, "canonical mean").solve(linear);
}

Eigen::MatrixXd CanonicalGaussian::covariance() const {
  return spd_inverse(precision, "canonical covariance");
}

Eigen::VectorXd draw_canonical(const CanonicalGaussian& g, Rng& rng, std::string_view what) {
  const auto llt = factor(g.precision, what);
  const Eigen::Index n = g.linear.size();
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
  // P = L L^T; L^T e = z gives e ~ N(0, P^{-1}).
  Eigen::VectorXd noise = llt.matrixU().solve(z);
  return llt.solve(g.linear) + noise;
}

Eigen::MatrixXd draw_inverse_wishart(const Eigen::MatrixXd& scale, double df, Rng& rng) {
  const Eigen::Index p = scale.rows();
  const Eigen::MatrixXd scale_inv = spd_inverse(scale, "inverse-Wishart scale");
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(scale_inv).matrixL();
  Eigen::MatrixXd bartlett = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    bartlett(i, i) = std::sqrt(rng.chi_square(df - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) bartlett(i, j) = rng.normal();
  }
  const Eigen::MatrixXd la = l * bartlett;
  const Eigen::MatrixXd wishart = la * la.transpose();
  Eigen::MatrixXd out = spd_inverse(wishart, "inverse-Wishart draw");
  return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, std::string_view what) {
  const auto llt = factor(m, what);
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

bool is_spd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || !m.allFinite()) return false;
  if (!m.isApprox(m.transpose(), 1e-10)) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

}  // namespace aqcast
