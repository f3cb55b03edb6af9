#pragma once

#include <stdexcept>
#include <string>

namespace mccl {

/// Base class for every error raised by this library. The message is always
/// prefixed with the error name so callers (and the CLI) can match on it.
class Error : public std::runtime_error {
public:
    Error(const std::string& name, const std::string& message)
        : std::runtime_error(name + ": " + message), name_(name) {}

    const std::string& name() const { return name_; }

private:
    std::string name_;
};

#define MCCL_DEFINE_ERROR(ErrorName)                                   \
    class ErrorName : public Error {                                   \
    public:                                                            \
        explicit ErrorName(const std::string& message)                 \
            : Error(#ErrorName, message) {}                            \
    }

// dataset
MCCL_DEFINE_ERROR(EmptyDataset);
MCCL_DEFINE_ERROR(ParseError);
MCCL_DEFINE_ERROR(RatingOutOfScale);
MCCL_DEFINE_ERROR(DatasetTooSmall);

// graph
MCCL_DEFINE_ERROR(InvalidIndex);
MCCL_DEFINE_ERROR(EmptyBatch);

// numeric
MCCL_DEFINE_ERROR(ShapeMismatch);
MCCL_DEFINE_ERROR(NonScalarLoss);

// fusion
MCCL_DEFINE_ERROR(BatchTooSmall);

// metrics
MCCL_DEFINE_ERROR(EmptyInput);
MCCL_DEFINE_ERROR(LengthMismatch);
MCCL_DEFINE_ERROR(NoEvaluableUsers);
MCCL_DEFINE_ERROR(InsufficientNegatives);

// config / cli
MCCL_DEFINE_ERROR(ConfigError);
MCCL_DEFINE_ERROR(IoError);

#undef MCCL_DEFINE_ERROR

}  // namespace mccl
