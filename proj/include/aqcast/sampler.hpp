#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "aqcast/linalg.hpp"
#include "aqcast/model.hpp"
#include "aqcast/rng.hpp"

namespace aqcast {

struct ChainConfig {
  long n_iter = 6000;
  long burn_in = 1000;
  long thin = 5;
  Variance variant = Variance::Homoscedastic;
  std::uint64_t seed = 1;

  /// 6000 iterations, 1000 burn-in, thin 5.
  static ChainConfig desk();
  /// 110000 iterations, 10000 burn-in, thin 10 (10000 retained draws).
  static ChainConfig paper();

  void validate() const;
  /// Number of retained draws: floor((n_iter - burn_in) / thin).
  long retained() const;
  /// Whether the state after 1-based sweep `iteration` is retained.
  bool keeps(long iteration) const;
};

struct InverseGammaParams {
  double shape = 0.0;
  double rate = 0.0;
};

struct InverseWishartParams {
  Eigen::MatrixXd scale;
  double df = 0.0;
};

struct ScalarGaussian {
  double mean = 0.0;
  double var = 0.0;
};

/// Read-only inputs shared by every full conditional.
struct SamplerContext {
  const ModelData& data;
  const Eigen::MatrixXd& precision;  // CAR precision Q for V1 and V2
  const PriorConfig& prior;
};

// Full conditionals. Each returns the exact distribution the matching kernel draws
// from, given every other block of `state`.

CanonicalGaussian beta_site_conditional(const ModelState& state, const SamplerContext& ctx, Pollutant k, int station);
CanonicalGaussian beta_mean_conditional(const ModelState& state, const PriorConfig& prior, Pollutant k);
InverseWishartParams beta_cov_conditional(const ModelState& state, const PriorConfig& prior, Pollutant k);
CanonicalGaussian gamma_site_conditional(const ModelState& state, const SamplerContext& ctx, Pollutant k, int station);
CanonicalGaussian gamma_mean_conditional(const ModelState& state, const PriorConfig& prior, Pollutant k);
InverseWishartParams gamma_cov_conditional(const ModelState& state, const PriorConfig& prior, Pollutant k);
/// One entry (homoscedastic) or one per hour of day.
std::vector<InverseGammaParams> sigma_conditional(const ModelState& state, const SamplerContext& ctx, Pollutant k);
CanonicalGaussian v1_conditional(const ModelState& state, const SamplerContext& ctx);
CanonicalGaussian v2_conditional(const ModelState& state, const SamplerContext& ctx);
/// Inverse-gamma for a11^2 given psi1: the a11 kernel's proposal. It is the exact
/// conditional when a12 = 0.
InverseGammaParams a11_proposal(const ModelState& state, const SamplerContext& ctx);
/// Log of the remaining a11 factor, -|psi2 - (a12/a11) psi1|_Q^2 / (2 a22^2), with
/// psi held at the state's current values.
double a11_log_weight(const ModelState& state, const SamplerContext& ctx, double a11);
/// Inverse-gamma for a22^2 given psi1, psi2, a11, a12.
InverseGammaParams a22_conditional(const ModelState& state, const SamplerContext& ctx);
/// Gaussian for a12 given V1, V2 (one-dimensional canonical form).
CanonicalGaussian a12_conditional(const ModelState& state, const SamplerContext& ctx);
/// Gaussian for a12 given psi1, psi2, a11, a22: the prior times the V2 CAR
/// density of (psi2 - a12 V1) / a22.
CanonicalGaussian a12_psi_conditional(const ModelState& state, const SamplerContext& ctx);
/// Missing outcome at (station, hour) given everything else, including the
/// forward terms of later hours that use it as a lag.
ScalarGaussian missing_conditional(const ModelState& state, const ModelData& data, Pollutant k, int station, int hour);

/// Blocked Gibbs sampler over one data set.
class GibbsSampler {
 public:
  GibbsSampler(ModelData data, Eigen::MatrixXd precision, PriorConfig prior = {});

  SamplerContext context() const { return {data_, precision_, prior_}; }
  const ModelData& data() const { return data_; }
  ModelData& data() { return data_; }
  const PriorConfig& prior() const { return prior_; }
  const Eigen::MatrixXd& precision() const { return precision_; }

  void update_beta_site(ModelState& s, Pollutant k, int station, Rng& rng) const;
  void update_beta_hyper(ModelState& s, Pollutant k, Rng& rng) const;
  void update_gamma_site(ModelState& s, Pollutant k, int station, Rng& rng) const;
  void update_gamma_hyper(ModelState& s, Pollutant k, Rng& rng) const;
  void update_sigma(ModelState& s, Pollutant k, Rng& rng) const;
  void update_v1(ModelState& s, Rng& rng) const;
  void update_v2(ModelState& s, Rng& rng) const;
  /// Independence Metropolis step on a11^2 with the inverse-gamma proposal; psi
  /// is held fixed and V1, V2 are rescaled. Returns whether the proposal was kept.
  bool update_a11(ModelState& s, Rng& rng) const;
  void update_a22(ModelState& s, Rng& rng) const;
  void update_a12(ModelState& s, Rng& rng) const;
  /// a12 redrawn with psi held fixed; V2 follows. Runs after update_a12.
  void update_a12_psi(ModelState& s, Rng& rng) const;
  /// Draws every missing cell of pollutant k in hour order, in place.
  void update_missing(ModelState& s, Pollutant k, std::uint64_t seed, long iteration);

  /// One full sweep: beta sites, beta hyper, gamma sites, gamma hyper, sigma^2,
  /// V1, V2, A (a11, a22, a12, then a12 again at fixed psi), missing cells. Throws NumericalError naming the
  /// block and iteration on non-finite output.
  void sweep(ModelState& s, std::uint64_t seed, long iteration);

 private:
  ModelData data_;
  Eigen::MatrixXd precision_;
  PriorConfig prior_;
};

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  /// n (1 - rho1) / (1 + rho1) from the lag-1 autocorrelation.
  double ess = 0.0;
};

/// Resumable sampler position: the state after `iteration` sweeps and the current
/// values of the missing cells.
struct ChainCheckpoint {
  ModelState state;
  long iteration = 0;
  std::array<std::vector<double>, kNumPollutants> missing_values;
};

void write_checkpoint(const std::filesystem::path& path, const ChainCheckpoint& cp);
ChainCheckpoint read_checkpoint(const std::filesystem::path& path);

struct ChainOutput {
  LagConfig lags;
  TransformPair transforms;
  Variance variant = Variance::Homoscedastic;
  std::vector<ModelState> draws;
  std::vector<long> iterations;
  std::array<std::vector<std::pair<int, int>>, kNumPollutants> missing_cells;
  /// Per retained draw and pollutant, modeling-scale values of `missing_cells`.
  std::vector<std::array<Eigen::VectorXd, kNumPollutants>> imputed;
  std::vector<ParamSummary> diagnostics;
  ChainCheckpoint final_state;
};

/// Runs sweeps start+1 .. cfg.n_iter on `sampler` from `state`.
ChainOutput run_chain(GibbsSampler& sampler, ModelState state, const ChainConfig& cfg, long start_iteration = 0);

/// Prepares data, builds the CAR structure from the panel's stations, initializes
/// (or resumes) and runs the chain.
ChainOutput run_chain(const HourlyPanel& panel, const LagConfig& lags, const TransformPair& transforms,
                      const ChainConfig& cfg, const PriorConfig& prior = {}, const ChainCheckpoint* resume = nullptr);

std::vector<ParamSummary> summarize_draws(const std::vector<ModelState>& draws, const LagConfig& lags);

/// Columnar dump: one row per retained draw, named parameter columns.
void write_draws_csv(const ChainOutput& chain, const std::filesystem::path& path);
void write_diagnostics_csv(const ChainOutput& chain, const std::filesystem::path& path);

/// Retained draws plus the metadata needed to predict from them.
void write_chain(const ChainOutput& chain, const std::filesystem::path& path);
ChainOutput read_chain(const std::filesystem::path& path);

}  // namespace aqcast
