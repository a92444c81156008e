#pragma once

#include <stdexcept>

namespace dimerlab {

/** Input lies outside the mathematical domain of an operation. */
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/** Requested system size exceeds what the chosen algorithm supports. */
struct SizeLimitError : std::length_error {
    using std::length_error::length_error;
};

/** A requested stationary branch does not exist at the given point. */
struct BranchUndefined : DomainError {
    using DomainError::DomainError;
};

/** A power-law fit stayed below the r^2 threshold after dropping large distances. */
struct FitQualityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dimerlab
