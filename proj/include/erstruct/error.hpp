#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace erstruct {

enum class ErrorCode {
  // genotype_io
  BadMagic,
  SampleMajorUnsupported,
  TruncatedPayload,
  RaggedRows,
  InvalidToken,
  AllMarkersDropped,
  // normalize_gram
  NoActiveMarkers,
  DimensionMismatch,
  // spectrum
  IndefiniteMatrix,
  ConvergenceFailure,
  ZeroDenominator,
  // goe_null
  DimensionTooSmall,
  CacheDimensionMismatch,
  // estimator
  InsufficientBulk,
  NonpositiveDenominator,
  // simulator
  InvalidDesign,
  BlockNotPSD,
  BlockTilingMismatch,
  // generic
  InvalidArgument,
  Io,
  Format,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::SampleMajorUnsupported: return "SampleMajorUnsupported";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::RaggedRows: return "RaggedRows";
    case ErrorCode::InvalidToken: return "InvalidToken";
    case ErrorCode::AllMarkersDropped: return "AllMarkersDropped";
    case ErrorCode::NoActiveMarkers: return "NoActiveMarkers";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IndefiniteMatrix: return "IndefiniteMatrix";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::CacheDimensionMismatch: return "CacheDimensionMismatch";
    case ErrorCode::InsufficientBulk: return "InsufficientBulk";
    case ErrorCode::NonpositiveDenominator: return "NonpositiveDenominator";
    case ErrorCode::InvalidDesign: return "InvalidDesign";
    case ErrorCode::BlockNotPSD: return "BlockNotPSD";
    case ErrorCode::BlockTilingMismatch: return "BlockTilingMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Format: return "Format";
  }
  return "Unknown";
}

}  // namespace erstruct
