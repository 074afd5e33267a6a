#include "aqcast/spatial.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "aqcast/errors.hpp"
#include "aqcast/log.hpp"

namespace aqcast {

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double deg = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * deg;
  const double dlon = (lon2 - lon1) * deg;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * deg) * std::cos(lat2 * deg) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

Eigen::MatrixXd pairwise_distances(std::span<const StationMeta> stations) {
  const auto n = static_cast<Eigen::Index>(stations.size());
  if (n < 2) throw DataError("pairwise_distances needs at least 2 stations");
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto& a = stations[i];
      const auto& b = stations[j];
      const double dij = haversine_km(a.lat, a.lon, b.lat, b.lon);
      if (dij == 0.0) {
        warn("stations " + a.id + " and " + b.id + " share coordinates; distance 0");
      }
      d(i, j) = d(j, i) = dij;
    }
  }
  return d;
}

SpatialStructure build_car(const Eigen::MatrixXd& dist) {
  if (dist.rows() != dist.cols() || dist.rows() < 2) {
    throw DataError("distance matrix must be square with at least 2 stations");
  }
  const double dmax = dist.maxCoeff();
  if (!(dmax > 0.0)) throw DataError("all station distances are zero; distance decay is undefined");
  SpatialStructure s;
  s.dist = dist;
  s.decay_a = 1.0 / dmax;
  s.W = (-s.decay_a * dist.array()).exp().matrix();
  s.W.diagonal().setZero();
  s.row_sums = s.W.rowwise().sum();
  s.Q = -s.W;
  s.Q.diagonal() = s.row_sums;
  return s;
}

SpatialStructure build_car(std::span<const StationMeta> stations) {
  return build_car(pairwise_distances(stations));
}

Eigen::Matrix2d Coregionalization::covariance() const {
  Eigen::Matrix2d a;
  a << a11, 0.0, a12, a22;
  return a * a.transpose();
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> coregionalize(const Eigen::VectorXd& v1,
                                                          const Eigen::VectorXd& v2,
                                                          const Coregionalization& a) {
  if (v1.size() != v2.size()) throw DataError("coregionalize: V1 and V2 lengths differ");
  return {a.a11 * v1, a.a12 * v1 + a.a22 * v2};
}

void write_spatial_csv(const SpatialStructure& s, const std::filesystem::path& w_csv,
                       const std::filesystem::path& q_csv) {
  auto dump = [](const Eigen::MatrixXd& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    const Eigen::IOFormat fmt(Eigen::FullPrecision, Eigen::DontAlignCols, ",", "\n");
    out << m.format(fmt) << '\n';
  };
  dump(s.W, w_csv);
  dump(s.Q, q_csv);
}

}  // namespace aqcast
