#pragma once

#include <stdexcept>
#include <string>

namespace panelse {

/// Base class for every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- Panel construction / CSV ingestion ---
struct MissingCell : Error {
  using Error::Error;
};
struct DuplicateCell : Error {
  using Error::Error;
};
struct ParseFailure : Error {
  using Error::Error;
};
struct EmptyInput : Error {
  using Error::Error;
};
struct AlreadyDemeaned : Error {
  using Error::Error;
};

// --- Estimation ---
struct SingularDesign : Error {
  using Error::Error;
};
struct ShapeMismatch : Error {
  using Error::Error;
};
struct IndexOutOfRange : Error {
  using Error::Error;
};
struct InvalidConfig : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};

// --- Cross-validation ---
struct TooShort : Error {
  using Error::Error;
};
struct FoldTooShort : Error {
  using Error::Error;
};

// --- Inference ---
struct SingularVX : Error {
  using Error::Error;
};
struct InvalidLevel : Error {
  using Error::Error;
};
struct NonPositiveVariance : Error {
  using Error::Error;
};

// --- Simulation ---
struct SingularSpatialSystem : Error {
  using Error::Error;
};

}  // namespace panelse
