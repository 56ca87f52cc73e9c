#pragma once

// Error taxonomy for the toolkit. Every throwing operation documents which of
// these it raises; report-style operations never throw.

#include <stdexcept>
#include <string>

namespace hjsys {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// coupling
struct MonotonicityViolated : Error { using Error::Error; };
struct NotNonnegative : Error { using Error::Error; };
struct NotIrreducible : Error { using Error::Error; };
struct RowSumsNonzero : Error { using Error::Error; };
struct DegenerateCofactor : Error { using Error::Error; };
struct KernelDimNotOne : Error { using Error::Error; };

// model
struct IndexOutOfRange : Error { using Error::Error; };

// grid / evolutive
struct DegenerateGrid : Error { using Error::Error; };
struct CflViolated : Error { using Error::Error; };
struct NonFiniteValue : Error { using Error::Error; };

// ergodic
struct NotConverged : Error { using Error::Error; };
struct BoundViolated : Error { using Error::Error; };
struct ExtrapolationUnstable : Error { using Error::Error; };

// longtime
struct EmptyAubrySet : Error { using Error::Error; };
struct CellNotInAubrySet : Error { using Error::Error; };
struct InsufficientHorizon : Error { using Error::Error; };

// control
struct StabilityViolated : Error { using Error::Error; };

// cli
struct PreconditionFailed : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct AuditFatal : Error { using Error::Error; };

struct SyntaxError : Error {
    std::size_t position;
    SyntaxError(const std::string& what, std::size_t pos)
        : Error(what + " (at offset " + std::to_string(pos) + ")"), position(pos) {}
};

}  // namespace hjsys
