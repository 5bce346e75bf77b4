#pragma once

#include <stdexcept>

namespace ascma {

// Base class for every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidDimensionError : Error { using Error::Error; };
struct NumericalStateError : Error { using Error::Error; };
struct InvalidFitnessError : Error { using Error::Error; };
struct InvalidConfigError : Error { using Error::Error; };
struct InsufficientPopulationError : Error { using Error::Error; };
struct InsufficientDataError : Error { using Error::Error; };
struct BoundsError : Error { using Error::Error; };
struct LandscapeEvaluationError : Error { using Error::Error; };
struct DegenerateEliteError : Error { using Error::Error; };
struct InvalidBudgetError : Error { using Error::Error; };
struct InvalidStudyError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace ascma
