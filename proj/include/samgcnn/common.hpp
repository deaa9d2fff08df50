#pragma once

#include <stdexcept>
#include <string>

namespace samgcnn {

// Error taxonomy. The CLI maps these onto exit codes:
//   usage -> 1, data/format -> 2, numeric -> 3.
struct SamError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FormatError : SamError {
    using SamError::SamError;
};

struct DataError : SamError {
    using SamError::SamError;
};

struct ConfigError : SamError {
    using SamError::SamError;
};

struct ShapeError : SamError {
    using SamError::SamError;
};

struct NumericError : SamError {
    using SamError::SamError;
};

struct DegenerateInputError : SamError {
    using SamError::SamError;
};

}  // namespace samgcnn
