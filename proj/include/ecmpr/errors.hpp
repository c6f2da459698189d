#pragma once

#include <stdexcept>
#include <string>

namespace ecmpr {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Covariance is singular or too ill-conditioned to invert.
struct DegenerateCovarianceError : Error {
    using Error::Error;
};

/// All responsibilities vanished; there is nothing to fit against.
struct NoSupportError : Error {
    using Error::Error;
};

/// Point configuration does not constrain the transform (collinear/coincident).
struct DegenerateGeometryError : Error {
    using Error::Error;
};

/// Matrix has rank < 2; the nearest rotation is not unique.
struct AmbiguousProjectionError : Error {
    using Error::Error;
};

/// Interior-point solve did not reach the duality-gap target.
struct RelaxationFailureError : Error {
    using Error::Error;
};

struct InvalidConfigError : Error {
    using Error::Error;
};

}  // namespace ecmpr
