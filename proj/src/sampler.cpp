#include "aqcast/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "aqcast/errors.hpp"

namespace aqcast {
namespace {

int idx(Pollutant k) { return static_cast<int>(k); }

double design_dot(const ModelState& s, const ModelData& d, int k, int i, int h) {
  const auto& b = s.beta[k];
  return b(i, 0) + b(i, 1) * d.tmp(i, h - 1) + b(i, 2) * d.rh(i, h - 1);
}

double lag_dot(const ModelState& s, const ModelData& d, int k, int i, int h) {
  const auto& lags = d.lags.lags(static_cast<Pollutant>(k));
  const auto& g = s.gamma[k];
  const auto& y = d.y[k];
  double acc = 0.0;
  for (std::size_t j = 0; j < lags.size(); ++j) acc += g(i, static_cast<Eigen::Index>(j)) * y(i, h - lags[j]);
  return acc;
}

double full_mean(const ModelState& s, const ModelData& d, int k, int i, int h) {
  return design_dot(s, d, k, i, h) + lag_dot(s, d, k, i, h) + s.psi(static_cast<Pollutant>(k), i);
}

/// 1 / sigma^2 by hour of day.
std::array<double, kHoursPerDay> precision_by_hour(const ModelState& s, int k) {
  std::array<double, kHoursPerDay> w{};
  for (int q = 0; q < kHoursPerDay; ++q) w[q] = 1.0 / s.error_variance(static_cast<Pollutant>(k), q);
  return w;
}

/// Per-station sums of w_t (y - x'beta - L'gamma) over analysis hours, and sum_t w_t.
struct WeightedResiduals {
  Eigen::VectorXd sum;
  double weight = 0.0;
};

WeightedResiduals weighted_residuals(const ModelState& s, const ModelData& d, int k) {
  const auto w = precision_by_hour(s, k);
  WeightedResiduals out;
  out.sum = Eigen::VectorXd::Zero(d.n_stations);
  for (int h = d.warmup; h < d.n_hours; ++h) out.weight += w[d.hour_of_day[h]];
  for (int i = 0; i < d.n_stations; ++i) {
    double acc = 0.0;
    for (int h = d.warmup; h < d.n_hours; ++h) {
      acc += w[d.hour_of_day[h]] * (d.y[k](i, h) - design_dot(s, d, k, i, h) - lag_dot(s, d, k, i, h));
    }
    out.sum(i) = acc;
  }
  return out;
}

CanonicalGaussian hier_mean_conditional(const Eigen::MatrixXd& site, const Eigen::MatrixXd& cov, const PriorConfig& prior) {
  const Eigen::Index dim = site.cols();
  CanonicalGaussian g;
  g.precision = Eigen::MatrixXd::Identity(dim, dim) / prior.mean_var;
  g.linear = Eigen::VectorXd::Zero(dim);
  if (site.rows() == 0 || dim == 0) return g;
  const Eigen::MatrixXd cov_inv = spd_inverse(cov, "hierarchical covariance");
  g.precision += static_cast<double>(site.rows()) * cov_inv;
  g.linear = cov_inv * site.colwise().sum().transpose();
  return g;
}

InverseWishartParams hier_cov_conditional(const Eigen::MatrixXd& site, const Eigen::VectorXd& mean, const PriorConfig& prior) {
  const Eigen::Index dim = site.cols();
  InverseWishartParams p;
  p.scale = prior.iw_scale * Eigen::MatrixXd::Identity(dim, dim);
  for (Eigen::Index i = 0; i < site.rows(); ++i) {
    const Eigen::VectorXd dev = site.row(i).transpose() - mean;
    p.scale += dev * dev.transpose();
  }
  p.df = static_cast<double>(site.rows()) + static_cast<double>(dim) + prior.iw_df_offset;
  return p;
}

double quad_form(const Eigen::MatrixXd& q, const Eigen::VectorXd& v) { return v.dot(q * v); }

void guard(bool ok, const char* block, long iteration) {
  if (!ok) {
    throw NumericalError(std::string("non-finite value in block ") + block + " at iteration " +
                         std::to_string(iteration));
  }
}

bool finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

}  // namespace

// ---------------------------------------------------------------- ChainConfig

ChainConfig ChainConfig::desk() { return {6000, 1000, 5, Variance::Homoscedastic, 1}; }

ChainConfig ChainConfig::paper() { return {110000, 10000, 10, Variance::Homoscedastic, 1}; }

void ChainConfig::validate() const {
  if (burn_in < 0) throw DataError("chain: burn_in must be nonnegative");
  if (n_iter < burn_in) throw DataError("chain: n_iter must be at least burn_in");
  if (thin < 1) throw DataError("chain: thin must be at least 1");
}

long ChainConfig::retained() const { return (n_iter - burn_in) / thin; }

bool ChainConfig::keeps(long iteration) const {
  return iteration > burn_in && iteration <= n_iter && (iteration - burn_in) % thin == 0;
}

// ---------------------------------------------------------------- conditionals

CanonicalGaussian beta_site_conditional(const ModelState& s, const SamplerContext& ctx, Pollutant kp, int i) {
  const int k = idx(kp);
  const ModelData& d = ctx.data;
  const auto w = precision_by_hour(s, k);
  const Eigen::MatrixXd cov_inv = spd_inverse(s.sigma_beta[k], "beta covariance");
  Eigen::Matrix3d xx = Eigen::Matrix3d::Zero();
  Eigen::Vector3d xr = Eigen::Vector3d::Zero();
  const double psi = s.psi(kp, i);
  for (int h = d.warmup; h < d.n_hours; ++h) {
    const double wt = w[d.hour_of_day[h]];
    const Eigen::Vector3d x = d.design(i, h);
    xx.noalias() += wt * x * x.transpose();
    xr += wt * (d.y[k](i, h) - lag_dot(s, d, k, i, h) - psi) * x;
  }
  CanonicalGaussian g;
  g.precision = cov_inv + xx;
  g.linear = cov_inv * s.beta0[k] + xr;
  return g;
}

CanonicalGaussian beta_mean_conditional(const ModelState& s, const PriorConfig& prior, Pollutant k) {
  return hier_mean_conditional(s.beta[idx(k)], s.sigma_beta[idx(k)], prior);
}

InverseWishartParams beta_cov_conditional(const ModelState& s, const PriorConfig& prior, Pollutant k) {
  return hier_cov_conditional(s.beta[idx(k)], s.beta0[idx(k)], prior);
}

CanonicalGaussian gamma_site_conditional(const ModelState& s, const SamplerContext& ctx, Pollutant kp, int i) {
  const int k = idx(kp);
  const ModelData& d = ctx.data;
  const auto& lags = d.lags.lags(kp);
  const auto nl = static_cast<Eigen::Index>(lags.size());
  const auto w = precision_by_hour(s, k);
  const Eigen::MatrixXd cov_inv = spd_inverse(s.sigma_gamma[k], "gamma covariance");
  Eigen::MatrixXd ll = Eigen::MatrixXd::Zero(nl, nl);
  Eigen::VectorXd lr = Eigen::VectorXd::Zero(nl);
  Eigen::VectorXd l(nl);
  const double psi = s.psi(kp, i);
  for (int h = d.warmup; h < d.n_hours; ++h) {
    const double wt = w[d.hour_of_day[h]];
    for (Eigen::Index j = 0; j < nl; ++j) l(j) = d.y[k](i, h - lags[j]);
    ll.noalias() += wt * l * l.transpose();
    lr += wt * (d.y[k](i, h) - design_dot(s, d, k, i, h) - psi) * l;
  }
  CanonicalGaussian g;
  g.precision = cov_inv + ll;
  g.linear = cov_inv * s.gamma0[k] + lr;
  return g;
}

CanonicalGaussian gamma_mean_conditional(const ModelState& s, const PriorConfig& prior, Pollutant k) {
  return hier_mean_conditional(s.gamma[idx(k)], s.sigma_gamma[idx(k)], prior);
}

InverseWishartParams gamma_cov_conditional(const ModelState& s, const PriorConfig& prior, Pollutant k) {
  return hier_cov_conditional(s.gamma[idx(k)], s.gamma0[idx(k)], prior);
}

std::vector<InverseGammaParams> sigma_conditional(const ModelState& s, const SamplerContext& ctx, Pollutant kp) {
  const int k = idx(kp);
  const ModelData& d = ctx.data;
  std::array<double, kHoursPerDay> ssr{};
  std::array<double, kHoursPerDay> count{};
  for (int i = 0; i < d.n_stations; ++i) {
    for (int h = d.warmup; h < d.n_hours; ++h) {
      const double r = d.y[k](i, h) - full_mean(s, d, k, i, h);
      ssr[d.hour_of_day[h]] += r * r;
      count[d.hour_of_day[h]] += 1.0;
    }
  }
  const auto& prior = ctx.prior;
  if (s.variance() == Variance::Homoscedastic) {
    double total_ssr = 0.0;
    double total = 0.0;
    for (int q = 0; q < kHoursPerDay; ++q) {
      total_ssr += ssr[q];
      total += count[q];
    }
    return {{prior.ig_shape + 0.5 * total, prior.ig_rate + 0.5 * total_ssr}};
  }
  std::vector<InverseGammaParams> out(kHoursPerDay);
  for (int q = 0; q < kHoursPerDay; ++q) out[q] = {prior.ig_shape + 0.5 * count[q], prior.ig_rate + 0.5 * ssr[q]};
  return out;
}

CanonicalGaussian v1_conditional(const ModelState& s, const SamplerContext& ctx) {
  const auto r1 = weighted_residuals(s, ctx.data, 0);
  const auto r2 = weighted_residuals(s, ctx.data, 1);
  const auto& a = s.a;
  CanonicalGaussian g;
  g.precision = ctx.precision;
  g.precision.diagonal().array() += a.a11 * a.a11 * r1.weight + a.a12 * a.a12 * r2.weight;
  g.linear = a.a11 * r1.sum + a.a12 * (r2.sum - a.a22 * r2.weight * s.v2);
  return g;
}

CanonicalGaussian v2_conditional(const ModelState& s, const SamplerContext& ctx) {
  const auto r2 = weighted_residuals(s, ctx.data, 1);
  const auto& a = s.a;
  CanonicalGaussian g;
  g.precision = ctx.precision;
  g.precision.diagonal().array() += a.a22 * a.a22 * r2.weight;
  g.linear = a.a22 * (r2.sum - a.a12 * r2.weight * s.v1);
  return g;
}

InverseGammaParams a11_proposal(const ModelState& s, const SamplerContext& ctx) {
  const Eigen::VectorXd psi1 = s.a.a11 * s.v1;
  return {ctx.prior.ig_shape + 0.5 * static_cast<double>(s.n_stations()),
          ctx.prior.ig_rate + 0.5 * quad_form(ctx.precision, psi1)};
}

double a11_log_weight(const ModelState& s, const SamplerContext& ctx, double a11) {
  if (!(a11 > 0.0)) throw NumericalError("coregionalization a11 must be positive");
  const auto [psi1, psi2] = s.psi();
  const Eigen::VectorXd eta = psi2 - (s.a.a12 / a11) * psi1;
  return -quad_form(ctx.precision, eta) / (2.0 * s.a.a22 * s.a.a22);
}

InverseGammaParams a22_conditional(const ModelState& s, const SamplerContext& ctx) {
  if (!(s.a.a11 > 0.0)) throw NumericalError("coregionalization a11 must be positive");
  const auto [psi1, psi2] = s.psi();
  const Eigen::VectorXd eta = psi2 - (s.a.a12 / s.a.a11) * psi1;
  return {ctx.prior.ig_shape + 0.5 * static_cast<double>(s.n_stations()),
          ctx.prior.ig_rate + 0.5 * quad_form(ctx.precision, eta)};
}

CanonicalGaussian a12_conditional(const ModelState& s, const SamplerContext& ctx) {
  const auto r2 = weighted_residuals(s, ctx.data, 1);
  CanonicalGaussian g;
  g.precision = Eigen::MatrixXd::Constant(1, 1, 1.0 / ctx.prior.mean_var + r2.weight * s.v1.squaredNorm());
  g.linear = Eigen::VectorXd::Constant(1, s.v1.dot(r2.sum - s.a.a22 * r2.weight * s.v2));
  return g;
}

CanonicalGaussian a12_psi_conditional(const ModelState& s, const SamplerContext& ctx) {
  const double a22sq = s.a.a22 * s.a.a22;
  const auto [psi1, psi2] = s.psi();
  const Eigen::VectorXd qv1 = ctx.precision * s.v1;
  CanonicalGaussian g;
  g.precision = Eigen::MatrixXd::Constant(1, 1, 1.0 / ctx.prior.mean_var + s.v1.dot(qv1) / a22sq);
  g.linear = Eigen::VectorXd::Constant(1, qv1.dot(psi2) / a22sq);
  return g;
}

ScalarGaussian missing_conditional(const ModelState& s, const ModelData& d, Pollutant kp, int i, int h) {
  const int k = idx(kp);
  const auto& lags = d.lags.lags(kp);
  const double w_t = 1.0 / s.error_variance(kp, d.hour_of_day[h]);
  double precision = w_t;
  double linear = w_t * full_mean(s, d, k, i, h);
  const double y_t = d.y[k](i, h);
  for (std::size_t j = 0; j < lags.size(); ++j) {
    const int f = h + lags[j];
    if (f >= d.n_hours) continue;
    const double g = s.gamma[k](i, static_cast<Eigen::Index>(j));
    const double w_f = 1.0 / s.error_variance(kp, d.hour_of_day[f]);
    precision += g * g * w_f;
    linear += g * w_f * (d.y[k](i, f) - full_mean(s, d, k, i, f) + g * y_t);
  }
  return {linear / precision, 1.0 / precision};
}

// ---------------------------------------------------------------- kernels

GibbsSampler::GibbsSampler(ModelData data, Eigen::MatrixXd precision, PriorConfig prior)
    : data_(std::move(data)), precision_(std::move(precision)), prior_(prior) {
  prior_.validate();
  if (precision_.rows() != data_.n_stations || precision_.cols() != data_.n_stations) {
    throw DataError("sampler: spatial precision does not match the number of stations");
  }
}

void GibbsSampler::update_beta_site(ModelState& s, Pollutant k, int i, Rng& rng) const {
  const auto g = beta_site_conditional(s, context(), k, i);
  s.beta[idx(k)].row(i) = draw_canonical(g, rng, "beta site conditional").transpose();
}

void GibbsSampler::update_beta_hyper(ModelState& s, Pollutant k, Rng& rng) const {
  s.beta0[idx(k)] = draw_canonical(beta_mean_conditional(s, prior_, k), rng, "beta mean conditional");
  const auto iw = beta_cov_conditional(s, prior_, k);
  s.sigma_beta[idx(k)] = draw_inverse_wishart(iw.scale, iw.df, rng);
}

void GibbsSampler::update_gamma_site(ModelState& s, Pollutant k, int i, Rng& rng) const {
  if (s.n_lags(k) == 0) return;
  const auto g = gamma_site_conditional(s, context(), k, i);
  s.gamma[idx(k)].row(i) = draw_canonical(g, rng, "gamma site conditional").transpose();
}

void GibbsSampler::update_gamma_hyper(ModelState& s, Pollutant k, Rng& rng) const {
  if (s.n_lags(k) == 0) return;
  s.gamma0[idx(k)] = draw_canonical(gamma_mean_conditional(s, prior_, k), rng, "gamma mean conditional");
  const auto iw = gamma_cov_conditional(s, prior_, k);
  s.sigma_gamma[idx(k)] = draw_inverse_wishart(iw.scale, iw.df, rng);
}

void GibbsSampler::update_sigma(ModelState& s, Pollutant k, Rng& rng) const {
  const auto params = sigma_conditional(s, context(), k);
  auto& out = s.sigma2[idx(k)];
  for (std::size_t q = 0; q < params.size(); ++q) {
    out(static_cast<Eigen::Index>(q)) = rng.inv_gamma(params[q].shape, params[q].rate);
  }
}

void GibbsSampler::update_v1(ModelState& s, Rng& rng) const {
  s.v1 = draw_canonical(v1_conditional(s, context()), rng, "V1 conditional");
}

void GibbsSampler::update_v2(ModelState& s, Rng& rng) const {
  s.v2 = draw_canonical(v2_conditional(s, context()), rng, "V2 conditional");
}

bool GibbsSampler::update_a11(ModelState& s, Rng& rng) const {
  if (!(s.a.a11 > 0.0)) throw NumericalError("coregionalization a11 must be positive");
  const auto ctx = context();
  const auto [psi1, psi2] = s.psi();
  const auto prop = a11_proposal(s, ctx);
  const double candidate = std::sqrt(rng.inv_gamma(prop.shape, prop.rate));
  const double log_ratio = a11_log_weight(s, ctx, candidate) - a11_log_weight(s, ctx, s.a.a11);
  const bool accept = std::log(rng.uniform()) < log_ratio;
  if (accept) {
    s.a.a11 = candidate;
    s.v1 = psi1 / candidate;
    s.v2 = (psi2 - s.a.a12 * s.v1) / s.a.a22;
  }
  return accept;
}

void GibbsSampler::update_a22(ModelState& s, Rng& rng) const {
  const auto params = a22_conditional(s, context());
  const Eigen::VectorXd eta = s.a.a22 * s.v2;
  s.a.a22 = std::sqrt(rng.inv_gamma(params.shape, params.rate));
  s.v2 = eta / s.a.a22;
}

void GibbsSampler::update_a12(ModelState& s, Rng& rng) const {
  s.a.a12 = draw_canonical(a12_conditional(s, context()), rng, "a12 conditional")(0);
}

void GibbsSampler::update_a12_psi(ModelState& s, Rng& rng) const {
  const Eigen::VectorXd psi2 = s.a.a12 * s.v1 + s.a.a22 * s.v2;
  s.a.a12 = draw_canonical(a12_psi_conditional(s, context()), rng, "a12 conditional")(0);
  s.v2 = (psi2 - s.a.a12 * s.v1) / s.a.a22;
}

void GibbsSampler::update_missing(ModelState& s, Pollutant kp, std::uint64_t seed, long iteration) {
  const int k = idx(kp);
  for (const auto& [i, h] : data_.missing[k]) {
    const auto c = missing_conditional(s, data_, kp, i, h);
    Rng rng = Rng::stream(seed, {static_cast<std::uint64_t>(iteration), key(StreamId::Missing),
                                 static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i),
                                 static_cast<std::uint64_t>(h)});
    data_.y[k](i, h) = c.mean + std::sqrt(c.var) * rng.normal();
  }
}

void GibbsSampler::sweep(ModelState& s, std::uint64_t seed, long it) {
  const auto u = [](auto v) { return static_cast<std::uint64_t>(v); };
  const std::uint64_t iter = u(it);
  const int ns = data_.n_stations;

  for (int k = 0; k < kNumPollutants; ++k) {
    const auto kp = static_cast<Pollutant>(k);
    for (int i = 0; i < ns; ++i) {
      Rng rng = Rng::stream(seed, {iter, key(StreamId::BetaSite), u(k), u(i)});
      update_beta_site(s, kp, i, rng);
    }
    guard(finite(s.beta[k]), "beta", it);
  }
  for (int k = 0; k < kNumPollutants; ++k) {
    Rng rng = Rng::stream(seed, {iter, key(StreamId::BetaHyper), u(k)});
    update_beta_hyper(s, static_cast<Pollutant>(k), rng);
    guard(finite(s.beta0[k]) && finite(s.sigma_beta[k]), "beta hyperparameters", it);
  }
  for (int k = 0; k < kNumPollutants; ++k) {
    const auto kp = static_cast<Pollutant>(k);
    for (int i = 0; i < ns; ++i) {
      Rng rng = Rng::stream(seed, {iter, key(StreamId::GammaSite), u(k), u(i)});
      update_gamma_site(s, kp, i, rng);
    }
    guard(finite(s.gamma[k]), "gamma", it);
  }
  for (int k = 0; k < kNumPollutants; ++k) {
    Rng rng = Rng::stream(seed, {iter, key(StreamId::GammaHyper), u(k)});
    update_gamma_hyper(s, static_cast<Pollutant>(k), rng);
    guard(finite(s.gamma0[k]) && finite(s.sigma_gamma[k]), "gamma hyperparameters", it);
  }
  for (int k = 0; k < kNumPollutants; ++k) {
    Rng rng = Rng::stream(seed, {iter, key(StreamId::Sigma), u(k)});
    update_sigma(s, static_cast<Pollutant>(k), rng);
    guard(finite(s.sigma2[k]) && (s.sigma2[k].array() > 0.0).all(), "sigma2", it);
  }
  {
    Rng rng = Rng::stream(seed, {iter, key(StreamId::V1)});
    update_v1(s, rng);
    guard(finite(s.v1), "V1", it);
  }
  {
    Rng rng = Rng::stream(seed, {iter, key(StreamId::V2)});
    update_v2(s, rng);
    guard(finite(s.v2), "V2", it);
  }
  {
    Rng r11 = Rng::stream(seed, {iter, key(StreamId::CoregA11)});
    update_a11(s, r11);
    Rng r22 = Rng::stream(seed, {iter, key(StreamId::CoregA22)});
    update_a22(s, r22);
    Rng r12 = Rng::stream(seed, {iter, key(StreamId::CoregA12)});
    update_a12(s, r12);
    update_a12_psi(s, r12);
    guard(s.a.valid() && finite(s.v1) && finite(s.v2), "A", it);
  }
  for (int k = 0; k < kNumPollutants; ++k) {
    update_missing(s, static_cast<Pollutant>(k), seed, it);
    bool ok = true;
    for (const auto& [i, h] : data_.missing[k]) ok = ok && std::isfinite(data_.y[k](i, h));
    guard(ok, "missing data", it);
  }
}

// ---------------------------------------------------------------- chain driver

namespace {

std::array<std::vector<double>, kNumPollutants> missing_values(const ModelData& d) {
  std::array<std::vector<double>, kNumPollutants> out;
  for (int k = 0; k < kNumPollutants; ++k) {
    for (const auto& [i, h] : d.missing[k]) out[k].push_back(d.y[k](i, h));
  }
  return out;
}

void restore_missing(ModelData& d, const std::array<std::vector<double>, kNumPollutants>& values) {
  for (int k = 0; k < kNumPollutants; ++k) {
    if (values[k].size() != d.missing[k].size()) {
      throw DataError("checkpoint: missing-cell count does not match the panel");
    }
    for (std::size_t c = 0; c < values[k].size(); ++c) {
      const auto [i, h] = d.missing[k][c];
      d.y[k](i, h) = values[k][c];
    }
  }
}

double parse_double(const std::string& tok, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') throw DataError(std::string("bad number in ") + what);
  return v;
}

void write_doubles(std::ostream& out, const std::vector<double>& values) {
  out << values.size();
  for (double v : values) out << ' ' << std::hexfloat << v << std::defaultfloat;
  out << '\n';
}

std::vector<double> read_doubles(std::istream& in, const char* what) {
  std::size_t n = 0;
  if (!(in >> n)) throw DataError(std::string("truncated ") + what);
  std::vector<double> out(n);
  for (auto& v : out) {
    std::string tok;
    if (!(in >> tok)) throw DataError(std::string("truncated ") + what);
    v = parse_double(tok, what);
  }
  return out;
}

std::string lag_text(const std::vector<int>& lags) {
  std::string out;
  for (std::size_t j = 0; j < lags.size(); ++j) out += (j ? "," : "") + std::to_string(lags[j]);
  return out.empty() ? "-" : out;
}

std::vector<int> parse_lag_text(const std::string& text) {
  std::vector<int> out;
  if (text == "-") return out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
  return out;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const ChainCheckpoint& cp) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << "aqcast-checkpoint 1\niteration " << cp.iteration << '\n';
  write_state(out, cp.state);
  for (const auto& v : cp.missing_values) write_doubles(out, v);
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

ChainCheckpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  std::string tag;
  std::string word;
  int version = 0;
  ChainCheckpoint cp;
  if (!(in >> tag >> version) || tag != "aqcast-checkpoint" || version != 1) {
    throw DataError("not a checkpoint file: " + path.string());
  }
  if (!(in >> word >> cp.iteration) || word != "iteration") throw DataError("checkpoint: missing iteration");
  cp.state = read_state(in);
  for (auto& v : cp.missing_values) v = read_doubles(in, "checkpoint missing values");
  return cp;
}

ChainOutput run_chain(GibbsSampler& sampler, ModelState state, const ChainConfig& cfg, long start) {
  cfg.validate();
  if (start < 0 || start > cfg.n_iter) throw DataError("chain: resume iteration outside the run");
  const ModelData& d = sampler.data();
  if (state.variance() != cfg.variant) throw DataError("chain: state variance does not match the configured variant");
  ChainOutput out;
  out.lags = d.lags;
  out.transforms = d.transforms;
  out.variant = cfg.variant;
  out.missing_cells = d.missing;
  out.draws.reserve(static_cast<std::size_t>(std::max<long>(cfg.retained(), 0)));
  for (long it = start + 1; it <= cfg.n_iter; ++it) {
    sampler.sweep(state, cfg.seed, it);
    if (cfg.keeps(it)) {
      out.draws.push_back(state);
      out.iterations.push_back(it);
      std::array<Eigen::VectorXd, kNumPollutants> imp;
      for (int k = 0; k < kNumPollutants; ++k) {
        imp[k].resize(static_cast<Eigen::Index>(d.missing[k].size()));
        for (std::size_t c = 0; c < d.missing[k].size(); ++c) {
          imp[k](static_cast<Eigen::Index>(c)) = d.y[k](d.missing[k][c].first, d.missing[k][c].second);
        }
      }
      out.imputed.push_back(std::move(imp));
    }
  }
  out.final_state = {state, cfg.n_iter, missing_values(d)};
  out.diagnostics = summarize_draws(out.draws, out.lags);
  return out;
}

ChainOutput run_chain(const HourlyPanel& panel, const LagConfig& lags, const TransformPair& transforms,
                      const ChainConfig& cfg, const PriorConfig& prior, const ChainCheckpoint* resume) {
  cfg.validate();
  ModelData data = prepare_model_data(panel, lags, transforms);
  const SpatialStructure spatial = build_car(panel.stations);
  ModelState state;
  long start = 0;
  if (resume) {
    restore_missing(data, resume->missing_values);
    state = resume->state;
    start = resume->iteration;
    if (state.n_stations() != data.n_stations) throw DataError("checkpoint: station count does not match the panel");
  } else {
    state = init_state(data, cfg.variant);
  }
  GibbsSampler sampler(std::move(data), spatial.Q, prior);
  return run_chain(sampler, std::move(state), cfg, start);
}

std::vector<ParamSummary> summarize_draws(const std::vector<ModelState>& draws, const LagConfig& lags) {
  std::vector<ParamSummary> out;
  if (draws.empty()) return out;
  std::vector<std::vector<std::pair<std::string, double>>> flat;
  flat.reserve(draws.size());
  for (const auto& d : draws) flat.push_back(flatten(d, lags));
  const std::size_t n = draws.size();
  const std::size_t np = flat.front().size();
  out.reserve(np);
  for (std::size_t p = 0; p < np; ++p) {
    double mean = 0.0;
    for (std::size_t t = 0; t < n; ++t) mean += flat[t][p].second;
    mean /= static_cast<double>(n);
    double var = 0.0;
    double cov1 = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double e = flat[t][p].second - mean;
      var += e * e;
      if (t + 1 < n) cov1 += e * (flat[t + 1][p].second - mean);
    }
    ParamSummary s;
    s.name = flat.front()[p].first;
    s.mean = mean;
    s.sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    double ess = static_cast<double>(n);
    if (var > 0.0 && n > 2) {
      const double rho = cov1 / var;
      ess = static_cast<double>(n) * (1.0 - rho) / (1.0 + rho);
      ess = std::clamp(ess, 1.0, static_cast<double>(n));
    }
    s.ess = ess;
    out.push_back(std::move(s));
  }
  return out;
}

void write_draws_csv(const ChainOutput& chain, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  bool header = false;
  for (std::size_t t = 0; t < chain.draws.size(); ++t) {
    const auto flat = flatten(chain.draws[t], chain.lags);
    if (!header) {
      out << "iteration";
      for (const auto& [name, v] : flat) out << ',' << name;
      out << '\n';
      header = true;
    }
    out << chain.iterations[t];
    for (const auto& [name, v] : flat) out << ',' << v;
    out << '\n';
  }
  if (!header) out << "iteration\n";
}

void write_diagnostics_csv(const ChainOutput& chain, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(10);
  out << "parameter,mean,sd,ess\n";
  for (const auto& s : chain.diagnostics) out << s.name << ',' << s.mean << ',' << s.sd << ',' << s.ess << '\n';
}

void write_chain(const ChainOutput& chain, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "aqcast-chain 1\n";
  out << "lags " << lag_text(chain.lags.ozone_lags) << ' ' << lag_text(chain.lags.pm10_lags) << '\n';
  out << "transforms " << (chain.transforms.ozone == OzoneScale::Sqrt ? "sqrt" : "identity") << ' '
      << (chain.transforms.pm10 == PmScale::Log ? "log" : "identity") << '\n';
  out << "variant " << variance_name(chain.variant) << '\n';
  out << "draws " << chain.draws.size() << '\n';
  for (std::size_t t = 0; t < chain.draws.size(); ++t) {
    out << "iteration " << chain.iterations[t] << '\n';
    write_state(out, chain.draws[t]);
  }
  if (!out) throw DataError("failed writing " + path.string());
}

ChainOutput read_chain(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read chain file " + path.string());
  std::string tag;
  std::string word;
  std::string a;
  std::string b;
  int version = 0;
  if (!(in >> tag >> version) || tag != "aqcast-chain" || version != 1) {
    throw DataError("not a chain file: " + path.string());
  }
  ChainOutput out;
  if (!(in >> word >> a >> b) || word != "lags") throw DataError("chain file: missing lags");
  out.lags = {parse_lag_text(a), parse_lag_text(b)};
  if (!(in >> word >> a >> b) || word != "transforms") throw DataError("chain file: missing transforms");
  out.transforms.ozone = a == "sqrt" ? OzoneScale::Sqrt : OzoneScale::Identity;
  out.transforms.pm10 = b == "log" ? PmScale::Log : PmScale::Identity;
  if (!(in >> word >> a) || word != "variant") throw DataError("chain file: missing variant");
  out.variant = parse_variance(a);
  std::size_t n = 0;
  if (!(in >> word >> n) || word != "draws") throw DataError("chain file: missing draw count");
  for (std::size_t t = 0; t < n; ++t) {
    long it = 0;
    if (!(in >> word >> it) || word != "iteration") throw DataError("chain file: truncated");
    out.iterations.push_back(it);
    out.draws.push_back(read_state(in));
  }
  out.diagnostics = summarize_draws(out.draws, out.lags);
  return out;
}

}  // namespace aqcast
