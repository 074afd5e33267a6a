#include "aqcast/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>

#include "aqcast/alerts.hpp"
#include "aqcast/errors.hpp"
#include "aqcast/rng.hpp"

namespace aqcast {
namespace {

bool hour_order(const std::pair<int, int>& a, const std::pair<int, int>& b) {
  return a.second != b.second ? a.second < b.second : a.first < b.first;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto b = tok.find_first_not_of(" ()");
    const auto e = tok.find_last_not_of(" ()");
    if (b == std::string::npos) continue;
    tok = tok.substr(b, e - b + 1);
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw DataError("bad lag '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

std::string lag_label(const std::vector<int>& lags) {
  std::string s = "(";
  for (std::size_t j = 0; j < lags.size(); ++j) s += (j ? "," : "") + std::to_string(lags[j]);
  return s + ")";
}

std::string candidate_label(const LagConfig& lags) {
  if (lags.ozone_lags == lags.pm10_lags) return lag_label(lags.ozone_lags);
  return "o3:" + lag_label(lags.ozone_lags) + " pm10:" + lag_label(lags.pm10_lags);
}

}  // namespace

double crps_ecdf(std::span<const double> samples, double y) {
  if (samples.empty()) throw DataError("CRPS needs at least one sample");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const auto m = static_cast<double>(x.size());
  double direct = 0.0;
  double spread = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    direct += std::abs(x[i] - y);
    // Sum over pairs of |x_j - x_k| = 2 sum_i (2i - M - 1) x_(i), i 1-based.
    spread += (2.0 * static_cast<double>(i + 1) - m - 1.0) * x[i];
  }
  return direct / m - spread / (m * m);
}

Standardizer Standardizer::identity(Eigen::Index dim) {
  return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

Standardizer Standardizer::from(const Eigen::MatrixXd& values) {
  if (values.rows() < 2) throw DataError("standardizer needs at least two values");
  Standardizer z;
  z.mean = values.colwise().mean().transpose();
  const Eigen::MatrixXd centered = values.rowwise() - z.mean.transpose();
  z.sd = (centered.colwise().squaredNorm() / static_cast<double>(values.rows() - 1)).cwiseSqrt().transpose();
  return z;
}

double energy_score(const Eigen::MatrixXd& samples, const Eigen::VectorXd& y, const Standardizer& z) {
  const Eigen::Index m = samples.rows();
  const Eigen::Index d = samples.cols();
  if (m < 1) throw DataError("energy score needs at least one sample");
  if (y.size() != d || z.mean.size() != d || z.sd.size() != d) throw DataError("energy score dimension mismatch");
  for (Eigen::Index c = 0; c < d; ++c) {
    if (!(z.sd(c) > 0.0)) throw DataError("energy score standardizer has zero spread");
  }
  const Eigen::ArrayXd inv = z.sd.array().inverse();
  Eigen::MatrixXd s(m, d);
  for (Eigen::Index r = 0; r < m; ++r) s.row(r) = ((samples.row(r).transpose() - z.mean).array() * inv).matrix();
  const Eigen::VectorXd ys = ((y - z.mean).array() * inv).matrix();
  double direct = 0.0;
  for (Eigen::Index r = 0; r < m; ++r) direct += (s.row(r).transpose() - ys).norm();
  double spread = 0.0;
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a + 1; b < m; ++b) spread += (s.row(a) - s.row(b)).norm();
  }
  const auto md = static_cast<double>(m);
  // Ordered pairs count each unordered pair twice.
  return direct / md - spread / (md * md);
}

PointScore point_scores(std::span<const double> samples, double y) {
  if (samples.empty()) throw DataError("point scores need at least one sample");
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(samples.size());
  std::vector<double> v(samples.begin(), samples.end());
  const double lo = quantile(v, 0.05);
  const double hi = quantile(std::move(v), 0.95);
  const double e = mean - y;
  return {e * e, std::abs(e), lo <= y && y <= hi};
}

std::vector<std::pair<int, int>> select_holdout(const HourlyPanel& panel, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw DataError("hold-out fraction must lie in (0, 1)");
  std::vector<std::pair<int, int>> eligible;
  const int ns = static_cast<int>(panel.stations.size());
  for (int h = panel.warmup_hours; h < panel.n_hours; ++h) {
    for (int i = 0; i < ns; ++i) {
      if (!std::isnan(panel.ozone(i, h)) && !std::isnan(panel.pm10(i, h))) eligible.emplace_back(i, h);
    }
  }
  const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(eligible.size())));
  Rng rng = Rng::stream(seed, {key(StreamId::Holdout)});
  // Partial Fisher-Yates: the first n slots end up as a uniform sample.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (eligible.size() - i));
    std::swap(eligible[i], eligible[j]);
  }
  eligible.resize(n);
  std::sort(eligible.begin(), eligible.end(), hour_order);
  return eligible;
}

HourlyPanel mask_holdout(const HourlyPanel& panel, const std::vector<std::pair<int, int>>& cells) {
  HourlyPanel p = panel;
  for (const auto& [i, h] : cells) {
    p.ozone(i, h) = std::numeric_limits<double>::quiet_NaN();
    p.pm10(i, h) = std::numeric_limits<double>::quiet_NaN();
  }
  p.refresh_missing();
  return p;
}

std::vector<Candidate> default_candidates() {
  const std::vector<std::vector<int>> menu = {{1, 2}, {1, 2, 24}, {1, 2, 24, 168}, {1, 2, 12}, {1, 2, 12, 24},
                                              {1, 2, 12, 24, 168}};
  std::vector<Candidate> out;
  for (std::size_t c = 0; c < menu.size(); ++c) out.push_back({std::to_string(c + 1), LagConfig::symmetric(menu[c])});
  return out;
}

Candidate parse_candidate(const std::string& text) {
  Candidate c;
  const auto semi = text.find(';');
  if (semi == std::string::npos) {
    c.lags = LagConfig::symmetric(parse_int_list(text));
  } else {
    for (const std::string& part : {text.substr(0, semi), text.substr(semi + 1)}) {
      const auto colon = part.find(':');
      if (colon == std::string::npos) throw DataError("bad candidate '" + text + "'");
      const std::string name = part.substr(0, colon);
      auto lags = parse_int_list(part.substr(colon + 1));
      if (name == "o3" || name == "ozone") c.lags.ozone_lags = std::move(lags);
      else if (name == "pm10") c.lags.pm10_lags = std::move(lags);
      else throw DataError("bad candidate pollutant '" + name + "'");
    }
  }
  c.lags.validate();
  c.name = candidate_label(c.lags);
  return c;
}

ScoreRow score_holdout(const ChainOutput& chain, const HourlyPanel& truth,
                       const std::vector<std::pair<int, int>>& cells) {
  if (cells.empty()) throw DataError("no held-out cells to score");
  if (chain.draws.empty()) throw DataError("scoring needs at least one retained draw");
  const auto nd = static_cast<Eigen::Index>(chain.imputed.size());
  const auto nc = static_cast<Eigen::Index>(cells.size());
  // Position of each held-out cell within the chain's missing-cell lists.
  std::array<std::vector<Eigen::Index>, kNumPollutants> pos;
  for (int k = 0; k < kNumPollutants; ++k) {
    const auto& mc = chain.missing_cells[k];
    for (const auto& cell : cells) {
      const auto it = std::lower_bound(mc.begin(), mc.end(), cell, hour_order);
      if (it == mc.end() || *it != cell) throw DataError("held-out cell was not imputed by the chain");
      pos[k].push_back(static_cast<Eigen::Index>(it - mc.begin()));
    }
  }
  Eigen::MatrixXd observed(nc, 2);
  for (Eigen::Index c = 0; c < nc; ++c) {
    const auto [i, h] = cells[static_cast<std::size_t>(c)];
    observed(c, 0) = truth.ozone(i, h);
    observed(c, 1) = truth.pm10(i, h);
  }
  if (!observed.allFinite()) throw DataError("held-out truth contains missing values");
  const Standardizer z = Standardizer::from(observed);

  ScoreRow row;
  row.lags = candidate_label(chain.lags);
  row.n_holdout = static_cast<long>(nc);
  std::array<double, 2> crps{};
  std::array<double, 2> sq{};
  std::array<double, 2> ab{};
  std::array<double, 2> cov{};
  double es = 0.0;
  Eigen::MatrixXd samples(nd, 2);
  std::vector<double> col(static_cast<std::size_t>(nd));
  for (Eigen::Index c = 0; c < nc; ++c) {
    for (int k = 0; k < kNumPollutants; ++k) {
      const auto kp = static_cast<Pollutant>(k);
      for (Eigen::Index m = 0; m < nd; ++m) {
        const double v = inverse(chain.imputed[static_cast<std::size_t>(m)][k](pos[k][static_cast<std::size_t>(c)]), kp,
                                 chain.transforms);
        samples(m, k) = v;
        col[static_cast<std::size_t>(m)] = v;
      }
      const double y = observed(c, k);
      crps[k] += crps_ecdf(col, y);
      const auto p = point_scores(col, y);
      sq[k] += p.sq_error;
      ab[k] += p.abs_error;
      cov[k] += p.covered;
    }
    es += energy_score(samples, observed.row(c).transpose(), z);
  }
  const auto n = static_cast<double>(nc);
  row.es = es / n;
  row.crps_o3 = crps[0] / n;
  row.rmse_o3 = std::sqrt(sq[0] / n);
  row.mae_o3 = ab[0] / n;
  row.cov90_o3 = cov[0] / n;
  row.crps_pm = crps[1] / n;
  row.rmse_pm = std::sqrt(sq[1] / n);
  row.mae_pm = ab[1] / n;
  row.cov90_pm = cov[1] / n;
  return row;
}

std::vector<ScoreRow> holdout_experiment(const HourlyPanel& panel, const std::vector<Candidate>& candidates,
                                         const TransformPair& transforms, const ChainConfig& chain,
                                         const PriorConfig& prior, const HoldoutConfig& cfg) {
  if (candidates.empty()) throw DataError("no candidate models");
  for (const auto& c : candidates) c.lags.validate();
  const auto cells = select_holdout(panel, cfg.fraction, cfg.seed);
  if (cells.size() < 2) throw DataError("hold-out too small to score");
  const HourlyPanel masked = mask_holdout(panel, cells);
  const auto run = [&](std::size_t c) {
    const ChainOutput out = run_chain(masked, candidates[c].lags, transforms, chain, prior);
    ScoreRow row = score_holdout(out, panel, cells);
    row.name = candidates[c].name;
    return row;
  };
  std::vector<ScoreRow> rows(candidates.size());
  const auto workers = static_cast<std::size_t>(std::max(1, cfg.workers));
  for (std::size_t first = 0; first < candidates.size(); first += workers) {
    const std::size_t last = std::min(candidates.size(), first + workers);
    std::vector<std::future<ScoreRow>> jobs;
    for (std::size_t c = first; c < last; ++c) {
      jobs.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, run, c));
    }
    for (std::size_t c = first; c < last; ++c) rows[c] = jobs[c - first].get();
  }
  return rows;
}

std::size_t best_by_es(const std::vector<ScoreRow>& rows) {
  if (rows.empty()) throw DataError("no score rows");
  std::size_t best = 0;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].es < rows[best].es) best = r;
  }
  return best;
}

void write_score_csv(const std::vector<ScoreRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(6);
  out << std::fixed;
  out << "model,lags,ES,O3_CRPS,O3_RMSE,O3_MAE,O3_Cov,PM10_CRPS,PM10_RMSE,PM10_MAE,PM10_Cov,n_holdout\n";
  for (const auto& r : rows) {
    out << r.name << ",\"" << r.lags << "\"," << r.es << ',' << r.crps_o3 << ',' << r.rmse_o3 << ',' << r.mae_o3
        << ',' << r.cov90_o3 << ',' << r.crps_pm << ',' << r.rmse_pm << ',' << r.mae_pm << ',' << r.cov90_pm << ','
        << r.n_holdout << '\n';
  }
}

}  // namespace aqcast
