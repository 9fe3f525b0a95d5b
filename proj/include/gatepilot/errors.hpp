#pragma once

#include <stdexcept>
#include <string>

namespace gatepilot {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error { public: using Error::Error; };
class InvalidState : public Error { public: using Error::Error; };
class InvalidAction : public Error { public: using Error::Error; };
class ContractViolation : public Error { public: using Error::Error; };
class ShapeError : public Error { public: using Error::Error; };
class InsufficientData : public Error { public: using Error::Error; };
class NumericalError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };

/// File-system failure; the message always carries the offending path.
class IoError : public Error {
public:
    IoError(const std::string& path, const std::string& what)
        : Error(path + ": " + what), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class CheckpointError : public Error { public: using Error::Error; };
class BadMagic : public CheckpointError { public: using CheckpointError::CheckpointError; };
class VersionMismatch : public CheckpointError { public: using CheckpointError::CheckpointError; };
class ChecksumMismatch : public CheckpointError { public: using CheckpointError::CheckpointError; };

}  // namespace gatepilot
