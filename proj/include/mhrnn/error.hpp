#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mhrnn {

enum class ErrorCode {
  EmptyCorpus,
  EmptyAlphabet,
  InvalidArgument,
  MissingDirectory,
  EmptyProblem,
  TooManyDocuments,
  NonUtf8File,
  InsufficientControls,
  DocTooShort,
  NonFiniteLoss,
  VersionMismatch,
  CorruptFile,
  ShapeMismatch,
  IdMismatch,
  NoControls,
  DegenerateAnchors,
  UniverseMismatch,
  NoTrueLinks,
  MissingTruth,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the
// CLI can report it in machine-readable form.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mhrnn
