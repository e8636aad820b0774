#pragma once

#include <stdexcept>
#include <string>

namespace lgfn {

// Base of every error this library throws. Each subclass maps onto one failure
// class so callers (and the CLI) can tell a bad file from a bad shape.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define LGFN_DEFINE_ERROR(Name)                 \
    class Name : public Error {                 \
    public:                                     \
        using Error::Error;                     \
    };

LGFN_DEFINE_ERROR(ShapeError)
LGFN_DEFINE_ERROR(InvalidSpecError)
LGFN_DEFINE_ERROR(InvalidInputError)
LGFN_DEFINE_ERROR(BoundsError)
LGFN_DEFINE_ERROR(FormatError)
LGFN_DEFINE_ERROR(CorruptionError)
LGFN_DEFINE_ERROR(IngestError)
LGFN_DEFINE_ERROR(ConfigError)
LGFN_DEFINE_ERROR(CheckpointError)
LGFN_DEFINE_ERROR(EvaluationError)
LGFN_DEFINE_ERROR(TrainingError)

#undef LGFN_DEFINE_ERROR

} // namespace lgfn
