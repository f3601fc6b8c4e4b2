#include "recast/error.h"

namespace recast {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::unsupported_schedule: return "unsupported-schedule";
        case ErrorCode::invalid_step: return "invalid-step";
        case ErrorCode::invalid_step_pair: return "invalid-step-pair";
        case ErrorCode::model_contract_violation: return "model-contract-violation";
        case ErrorCode::invalid_mask: return "invalid-mask";
        case ErrorCode::invalid_shape: return "invalid-shape";
        case ErrorCode::invalid_dataset: return "invalid-dataset";
        case ErrorCode::migration_error: return "migration-error";
        case ErrorCode::io_error: return "io-error";
        case ErrorCode::invalid_region: return "invalid-region";
        case ErrorCode::checkpoint_error: return "checkpoint-error";
        case ErrorCode::usage_error: return "usage-error";
        case ErrorCode::validation_error: return "validation-error";
    }
    return "unknown-error";
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::usage_error:
            return 2;
        case ErrorCode::migration_error:
        case ErrorCode::checkpoint_error:
            return 3;
        case ErrorCode::io_error:
            return 4;
        default:
            return 5;
    }
}

}  // namespace recast
