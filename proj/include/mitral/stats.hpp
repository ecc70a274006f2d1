#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mitral/measurement.hpp"

namespace mitral {

struct BlandAltman {
  double bias = 0.0;
  double sd = 0.0;  // sample SD (n - 1)
  double loa_low = 0.0;
  double loa_high = 0.0;
};

/// Differences a - b; limits are bias -/+ 2 SD.
BlandAltman bland_altman(std::span<const double> a, std::span<const double> b);
double pearson(std::span<const double> a, std::span<const double> b);
/// R^2 of the least-squares fit of b on a.
double r_squared(std::span<const double> a, std::span<const double> b);

enum class Field { e, a, ea, dt };
const char* to_string(Field field);
inline constexpr Field kAllFields[] = {Field::e, Field::a, Field::ea, Field::dt};

struct AgreementStats {
  Field field = Field::e;
  std::size_t n = 0;
  double bias = 0.0;
  double sd = 0.0;
  double loa_low = 0.0;
  double loa_high = 0.0;
  std::optional<double> pearson_r;  // absent when either series is constant
  std::optional<double> r_squared;
  std::size_t dropped = 0;  // keys present on only one side, or field missing on one side
};

/// Study id -> beats. Keys for pairing are (study, beat index).
using MeasurementSet = std::map<std::string, std::vector<BeatMeasurement>>;

/// Replaces each study's beats by a single beat holding the study means.
MeasurementSet per_study_means(const MeasurementSet& set);

/// Pairs `test` against `reference` by (study, beat); bias is mean(test - reference).
/// Throws ErrorCode::stats when no key overlaps or fewer than 2 pairs carry the field.
AgreementStats compare(const MeasurementSet& reference, const MeasurementSet& test, Field field);

}  // namespace mitral
