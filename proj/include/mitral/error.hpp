#pragma once

#include <stdexcept>
#include <string>

namespace mitral {

enum class ErrorCode {
  io,
  format,
  manifest,
  unknown_label,
  region,
  empty_segmentation,
  mask_dimensions,
  empty_ecg,
  labeling,
  synth_conflict,
  invalid_params,
  stats,
  aggregate,
  rejected,
};

const char* to_string(ErrorCode code);

/// Pipeline error. `stage` names the processing stage that raised it (may be empty).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string stage = {})
      : std::runtime_error(stage.empty() ? message : stage + ": " + message),
        code_(code),
        stage_(std::move(stage)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  ErrorCode code_;
  std::string stage_;
};

}  // namespace mitral
