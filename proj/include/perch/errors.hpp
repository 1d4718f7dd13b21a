#pragma once

#include <stdexcept>
#include <string>

namespace perch {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// so3
struct NotSkewSymmetric : Error {
    using Error::Error;
};
struct Degenerate : Error {
    using Error::Error;
};

// dynamics
struct SimulationDiverged : Error {
    using Error::Error;
};

// rl
struct EmptyTrajectory : Error {
    using Error::Error;
};
struct DivergedTraining : Error {
    using Error::Error;
};

// trajectory
struct PolicyDiverged : Error {
    using Error::Error;
};
struct TooShort : Error {
    using Error::Error;
};

// controller
struct SingularHeading : Error {
    using Error::Error;
};

// mission
struct MissionTimeout : Error {
    using Error::Error;
};

// io
struct ParseError : Error {
    using Error::Error;
};
struct ValidationError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct VersionMismatch : Error {
    using Error::Error;
};
struct ShapeMismatch : Error {
    using Error::Error;
};

}  // namespace perch
