#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mitral/ecg.hpp"
#include "mitral/ingestion.hpp"
#include "mitral/measurement.hpp"
#include "mitral/stats.hpp"

namespace mitral {

inline constexpr const char* kStudyCsvHeader = "beat,e_mps,a_mps,ea_ratio,dt_ms,e_time_ms,a_time_ms,flags";
inline constexpr const char* kAgreementCsvHeader = "field,n,bias,sd,loa_low,loa_high,pearson_r,r_squared";

std::string format_fixed(double value, int decimals);
std::string format_fixed(const std::optional<double>& value, int decimals);

/// One row per beat plus a trailing `mean` summary row; absent values are empty.
std::string format_study_csv(const StudyResult& result);
/// Beat rows of a study CSV; the summary row is skipped.
std::vector<BeatMeasurement> parse_study_csv(const std::string& text, const std::string& source = "<memory>");

/// Every `*.csv` study file in a directory (study id = file name up to the
/// first '.'), or a single file.
MeasurementSet load_measurements(const std::filesystem::path& path);

/// Rows for fields whose statistics could not be computed carry only field and n.
struct AgreementRow {
  Field field = Field::e;
  std::size_t n = 0;
  std::optional<AgreementStats> stats;
};
std::string format_agreement_csv(const std::vector<AgreementRow>& rows);

std::string format_ecg_csv(const EcgSignal& signal, const CalibrationManifest& manifest);

/// Study id used for pairing: file name up to the first '.'.
std::string study_id(const std::filesystem::path& path);

}  // namespace mitral
