#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <utility>

#include "aqcast/panel.hpp"

namespace aqcast {

inline constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle distance on a 6371 km sphere.
double haversine_km(double lat1, double lon1, double lat2, double lon2);

/// Symmetric station distance matrix in km with a zero diagonal.
/// Distinct stations sharing coordinates produce a warning and distance 0.
Eigen::MatrixXd pairwise_distances(std::span<const StationMeta> stations);

/// Distance-decay CAR structure. W_ij = exp(-decay_a * dist_ij) off the diagonal,
/// decay_a = 1 / max distance, and Q = D_W - W.
struct SpatialStructure {
  Eigen::MatrixXd dist;
  double decay_a = 0.0;
  Eigen::MatrixXd W;
  Eigen::VectorXd row_sums;
  Eigen::MatrixXd Q;

  int n_stations() const { return static_cast<int>(dist.rows()); }
};

SpatialStructure build_car(const Eigen::MatrixXd& dist);
SpatialStructure build_car(std::span<const StationMeta> stations);

/// Lower-triangular coregionalization matrix [[a11, 0], [a12, a22]].
struct Coregionalization {
  double a11 = 1.0;
  double a12 = 0.0;
  double a22 = 1.0;

  /// True when a11, a22 > 0 (then A A^T is positive definite).
  bool valid() const { return a11 > 0.0 && a22 > 0.0; }
  Eigen::Matrix2d covariance() const;
};

/// psi1 = a11 V1, psi2 = a12 V1 + a22 V2.
std::pair<Eigen::VectorXd, Eigen::VectorXd> coregionalize(const Eigen::VectorXd& v1,
                                                          const Eigen::VectorXd& v2,
                                                          const Coregionalization& a);

/// Debug dump of W and Q as plain CSV matrices.
void write_spatial_csv(const SpatialStructure& s, const std::filesystem::path& w_csv,
                       const std::filesystem::path& q_csv);

}  // namespace aqcast
