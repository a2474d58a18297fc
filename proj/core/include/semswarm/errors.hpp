#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semswarm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error { using Error::Error; };
class EmptyWorld : public Error { using Error::Error; };
class IndexError : public Error { using Error::Error; };
class EmptyTrajectory : public Error { using Error::Error; };
class ImageTooSmall : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class EmptyInput : public Error { using Error::Error; };
class InsufficientAgents : public Error { using Error::Error; };
class EmptyPrompt : public Error { using Error::Error; };
class EmbedServiceError : public Error { using Error::Error; };
class ProtocolError : public Error { using Error::Error; };
class DatasetTooSmall : public Error { using Error::Error; };
class SingularSystem : public Error { using Error::Error; };
class BoundaryValue : public Error { using Error::Error; };
class CovarianceError : public Error { using Error::Error; };
class InvalidFitness : public Error { using Error::Error; };
class PopulationMismatch : public Error { using Error::Error; };
class CapacityExceeded : public Error { using Error::Error; };
class InsufficientData : public Error { using Error::Error; };
class TooManyClusters : public Error { using Error::Error; };
class NotFound : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace semswarm
