#pragma once

#include <stdexcept>
#include <string>

namespace rmk {

// Error taxonomy. The CLI maps these onto exit codes:
//   usage/config/contract -> 1, data -> 2, training -> 3, format -> 4.

// Bad command-line usage (wrong flag combinations, malformed bit strings).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Config file failed to parse against the schema.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Config parsed but violates an invariant; message names the field.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// API called outside its documented contract (shape mismatch, empty grid, ...).
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Severity outside the attack's legal domain.
struct SeverityDomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dataset/file ingestion problems.
struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Checkpoint or table file format/version problems.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training aborted (non-finite loss, ...).
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace rmk
