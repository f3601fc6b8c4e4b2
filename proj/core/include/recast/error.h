#pragma once

#include <stdexcept>
#include <string>

namespace recast {

enum class ErrorCode {
    invalid_argument,
    unsupported_schedule,
    invalid_step,
    invalid_step_pair,
    model_contract_violation,
    invalid_mask,
    invalid_shape,
    invalid_dataset,
    migration_error,
    io_error,
    invalid_region,
    checkpoint_error,
    usage_error,
    validation_error,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(msg), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
    throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
    if (!cond) fail(code, msg);
}

const char* error_code_name(ErrorCode code);

// Process exit codes: 0 ok, 2 usage, 3 state/migration, 4 io, 5 validation.
int exit_code_for(ErrorCode code);

}  // namespace recast
