#pragma once

#include <stdexcept>
#include <string>

namespace vawe {

// Error categories, used by the CLI to pick exit codes and by tests to
// assert on failure modes.
enum class ErrorKind {
    Usage,       // bad command line
    Config,      // invalid configuration value (k out of range, ...)
    Shape,       // dimension/shape mismatch between inputs
    Parse,       // malformed text input (embeddings, features, split)
    Checkpoint,  // malformed or incompatible checkpoint file
    Numeric,     // numerical failure (not SPD, non-finite result)
    Divergence,  // training produced a non-finite loss
    Protocol,    // inconsistent inputs at the task level (class-set mismatch, ...)
    Io,          // file system failure
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

struct UsageError : Error {
    explicit UsageError(const std::string& m) : Error(ErrorKind::Usage, m) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorKind::Config, m) {}
};
struct ShapeError : Error {
    explicit ShapeError(const std::string& m) : Error(ErrorKind::Shape, m) {}
};
struct ParseError : Error {
    explicit ParseError(const std::string& m) : Error(ErrorKind::Parse, m) {}
};
struct CheckpointError : Error {
    explicit CheckpointError(const std::string& m) : Error(ErrorKind::Checkpoint, m) {}
};
struct NumericError : Error {
    explicit NumericError(const std::string& m) : Error(ErrorKind::Numeric, m) {}
};
struct DivergenceError : Error {
    explicit DivergenceError(const std::string& m) : Error(ErrorKind::Divergence, m) {}
};
struct ProtocolError : Error {
    explicit ProtocolError(const std::string& m) : Error(ErrorKind::Protocol, m) {}
};
struct IoError : Error {
    explicit IoError(const std::string& m) : Error(ErrorKind::Io, m) {}
};

inline const char* error_category(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage: return "usage";
        case ErrorKind::Config: return "config";
        case ErrorKind::Shape: return "shape";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Checkpoint: return "checkpoint";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Divergence: return "divergence";
        case ErrorKind::Protocol: return "protocol";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

}  // namespace vawe
