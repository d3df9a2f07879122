#pragma once

#include <stdexcept>
#include <string>

namespace cellmap {

// Base class for all contract violations raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InvalidCountError : Error { using Error::Error; };
struct ZeroVectorError : Error { using Error::Error; };
struct AngleNearPiError : Error { using Error::Error; };
struct EmptyMapError : Error { using Error::Error; };
struct LatticeMismatchError : Error { using Error::Error; };
struct InsufficientCorrespondencesError : Error { using Error::Error; };
struct SingularNormalEquationsError : Error { using Error::Error; };
struct DisconnectedGraphError : Error { using Error::Error; };
struct SingularSystemError : Error { using Error::Error; };
struct IndexMismatchError : Error { using Error::Error; };
struct MissingPoseError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct DegenerateTrajectoryError : Error { using Error::Error; };
struct TrajectoryTooShortError : Error { using Error::Error; };
struct EmptyDatasetError : Error { using Error::Error; };

}  // namespace cellmap
