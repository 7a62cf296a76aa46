#include "mhrnn/log.hpp"

#include "mhrnn/error.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace mhrnn {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyAlphabet: return "EmptyAlphabet";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingDirectory: return "MissingDirectory";
    case ErrorCode::EmptyProblem: return "EmptyProblem";
    case ErrorCode::TooManyDocuments: return "TooManyDocuments";
    case ErrorCode::NonUtf8File: return "NonUtf8File";
    case ErrorCode::InsufficientControls: return "InsufficientControls";
    case ErrorCode::DocTooShort: return "DocTooShort";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::NoControls: return "NoControls";
    case ErrorCode::DegenerateAnchors: return "DegenerateAnchors";
    case ErrorCode::UniverseMismatch: return "UniverseMismatch";
    case ErrorCode::NoTrueLinks: return "NoTrueLinks";
    case ErrorCode::MissingTruth: return "MissingTruth";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace log {
namespace {

std::mutex sink_mutex;
std::atomic<bool> verbose_flag{false};

void default_sink(Level level, const std::string& message) {
  if (level == Level::warning) {
    std::cerr << "warning: " << message << '\n';
  } else if (verbose_flag.load()) {
    std::cerr << message << '\n';
  }
}

Sink& current_sink() {
  static Sink sink = default_sink;
  return sink;
}

void emit(Level level, const std::string& message) {
  std::lock_guard lock(sink_mutex);
  current_sink()(level, message);
}

}  // namespace

Sink set_sink(Sink sink) {
  std::lock_guard lock(sink_mutex);
  Sink previous = std::move(current_sink());
  current_sink() = sink ? std::move(sink) : Sink(default_sink);
  return previous;
}

void set_verbose(bool verbose) { verbose_flag.store(verbose); }

void debug(const std::string& message) { emit(Level::debug, message); }
void info(const std::string& message) { emit(Level::info, message); }
void warning(const std::string& message) { emit(Level::warning, message); }

}  // namespace log
}  // namespace mhrnn
