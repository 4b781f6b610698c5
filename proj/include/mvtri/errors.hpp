#pragma once

#include <stdexcept>
#include <string>

namespace mvtri {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Camera / problem construction
struct NonRotation : Error { using Error::Error; };
struct BadIntrinsics : Error { using Error::Error; };
struct SizeMismatch : Error { using Error::Error; };
struct TooFewViews : Error { using Error::Error; };
struct DegenerateRay : Error { using Error::Error; };
struct TooFewRays : Error { using Error::Error; };

// Pair geometry / refinement
struct ZeroBaseline : Error { using Error::Error; };
struct SingularDepth : Error { using Error::Error; };
struct PointAtInfinity : Error { using Error::Error; };
struct SingularSystem : Error { using Error::Error; };

// Uncertainty model
struct TooFewInliers : Error { using Error::Error; };
struct InvalidGrid : Error { using Error::Error; };
struct AllCellsEmpty : Error { using Error::Error; };
struct EmptySpec : Error { using Error::Error; };

// Synthetic scenes
struct VisibilityTimeout : Error { using Error::Error; };

// I/O
struct VersionMismatch : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct NonMonotoneGrid : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };

}  // namespace mvtri
