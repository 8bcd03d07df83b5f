#pragma once

#include <stdexcept>
#include <string>

namespace selfdetect {

// Base for all library errors. CLI maps subtypes to exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Configuration / input validation (CLI exit code 1).
struct ConfigError : Error {
    using Error::Error;
};
struct SchemaViolation : Error {
    using Error::Error;
};
struct IoFailure : Error {
    using Error::Error;
};
struct EmptyPayload : Error {
    using Error::Error;
};
struct EmptyGroup : Error {
    using Error::Error;
};
struct EmptyTrialList : Error {
    using Error::Error;
};
struct EmptyCorpus : Error {
    using Error::Error;
};
struct InsufficientRecords : Error {
    InsufficientRecords(std::string deficient_class, std::size_t have, std::size_t need)
        : Error("insufficient " + deficient_class + " records: have " + std::to_string(have) +
                ", need " + std::to_string(need)),
          deficient_class(std::move(deficient_class)) {}
    std::string deficient_class;
};
struct MixedGenerator : Error {
    using Error::Error;
};
struct DegenerateCalibration : Error {
    using Error::Error;
};

// Wraps a failure with run context (which topic, which essay) while keeping
// the original exception reachable for exit-code classification.
struct StepFailure : Error {
    StepFailure(const std::string& context, std::exception_ptr cause_ptr,
                const std::string& cause_text)
        : Error(context + ": " + cause_text), cause(std::move(cause_ptr)) {}
    std::exception_ptr cause;
};

// Transport family (CLI exit code 3).
struct TransportFailure : Error {
    using Error::Error;
};
struct AuthMissing : Error {
    using Error::Error;
};
struct CacheMiss : Error {
    using Error::Error;
};
struct MalformedScore : Error {
    using Error::Error;
};

}  // namespace selfdetect
