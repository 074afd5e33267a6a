#pragma once

namespace aqcast {

enum class Pollutant : int { Ozone = 0, Pm10 = 1 };
inline constexpr int kNumPollutants = 2;

enum class OzoneScale { Identity, Sqrt };
enum class PmScale { Identity, Log };

/// Variance-stabilizing transforms applied before modeling.
struct TransformPair {
  OzoneScale ozone = OzoneScale::Sqrt;
  PmScale pm10 = PmScale::Log;

  static TransformPair identity() { return {OzoneScale::Identity, PmScale::Identity}; }
};

/// Concentration to modeling scale. Throws DataError for log of a nonpositive
/// value or sqrt of a negative one; NaN passes through unchanged.
double forward(double value, OzoneScale scale);
double forward(double value, PmScale scale);
double forward(double value, Pollutant k, const TransformPair& t);

/// Modeling scale back to concentration. Sqrt-scale values below zero are
/// clamped to zero before squaring.
double inverse(double value, OzoneScale scale);
double inverse(double value, PmScale scale);
double inverse(double value, Pollutant k, const TransformPair& t);

}  // namespace aqcast
