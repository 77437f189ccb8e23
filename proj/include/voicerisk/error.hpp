#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace voicerisk {

enum class Errc {
  // audio-io
  MalformedHeader,
  UnsupportedEncoding,
  EmptyAudio,
  SilentInput,
  // segmentation
  SchemaError,
  OverlapError,
  IndexOutOfRange,
  OutOfBounds,
  // acoustic features
  TooShort,
  ZeroSpectrum,
  NoVoicedRun,
  EmptyTrack,
  // feature store / normalization
  DimMismatch,
  DuplicateKey,
  NonFiniteValue,
  MissingSegment,
  TooFewRows,
  // linear svm
  SingleClass,
  MissingTargetGender,
  InvalidPolicy,
  DegenerateData,
  // evaluation
  TooFewSubjects,
  SingleClassTruth,
  EmptyGroup,
  DegenerateResampling,
  // stats / synth
  HeterogeneousModels,
  InvalidSpec,
  // plumbing
  IoError,
  ConfigError,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI's exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace voicerisk
