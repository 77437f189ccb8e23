#include "voicerisk/error.hpp"

namespace voicerisk {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::UnsupportedEncoding: return "UnsupportedEncoding";
    case Errc::EmptyAudio: return "EmptyAudio";
    case Errc::SilentInput: return "SilentInput";
    case Errc::SchemaError: return "SchemaError";
    case Errc::OverlapError: return "OverlapError";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::TooShort: return "TooShort";
    case Errc::ZeroSpectrum: return "ZeroSpectrum";
    case Errc::NoVoicedRun: return "NoVoicedRun";
    case Errc::EmptyTrack: return "EmptyTrack";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::DuplicateKey: return "DuplicateKey";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::MissingSegment: return "MissingSegment";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::SingleClass: return "SingleClass";
    case Errc::MissingTargetGender: return "MissingTargetGender";
    case Errc::InvalidPolicy: return "InvalidPolicy";
    case Errc::DegenerateData: return "DegenerateData";
    case Errc::TooFewSubjects: return "TooFewSubjects";
    case Errc::SingleClassTruth: return "SingleClassTruth";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::DegenerateResampling: return "DegenerateResampling";
    case Errc::HeterogeneousModels: return "HeterogeneousModels";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::IoError: return "IoError";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace voicerisk
