#pragma once

#include <stdexcept>
#include <string>

namespace promptopt {

struct BackendUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MarkerNotFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TooFewExamples : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonMonotonicStep : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StepOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MissingPlaceholder : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExampleCountMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyErrorDemos : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnknownBaseline : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyBatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LengthMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CorruptState : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MissingRun : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace promptopt
