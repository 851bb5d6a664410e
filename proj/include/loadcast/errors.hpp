#pragma once

#include <stdexcept>
#include <string>

namespace loadcast {

// Base class for all loadcast failures so callers can catch one type.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// series
struct IngestError : Error {
    using Error::Error;
};
struct InsufficientData : Error {
    using Error::Error;
};
struct GroupingError : Error {
    using Error::Error;
};
struct LagError : Error {
    using Error::Error;
};
struct SplitError : Error {
    using Error::Error;
};

// diagnostics / evaluation
struct DegenerateSeries : Error {
    using Error::Error;
};
struct EmptyInput : Error {
    using Error::Error;
};
struct DegenerateDifferential : Error {
    using Error::Error;
};

// model fitting
struct ParamError : Error {
    using Error::Error;
};
struct NumericError : Error {
    using Error::Error;
};
struct TrainingDiverged : Error {
    using Error::Error;
};
struct CvError : Error {
    using Error::Error;
};
struct WeightError : Error {
    using Error::Error;
};
struct RankError : Error {
    using Error::Error;
};

// cli / config
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace loadcast
