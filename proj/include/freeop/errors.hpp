#pragma once

#include <stdexcept>
#include <string>

namespace freeop {

// Base of everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caused by user-supplied input (files, flags, out-of-range arguments).
// The CLI maps these to exit code 2.
struct InputError : Error {
    using Error::Error;
};

// Broken internal invariant. The CLI maps these to exit code 3.
struct InternalError : Error {
    using Error::Error;
};

struct SchemaError : InputError { using InputError::InputError; };
struct ValidationError : InputError { using InputError::InputError; };
struct ParseError : InputError { using InputError::InputError; };
struct IoError : InputError { using InputError::InputError; };
struct TypeMismatch : InputError { using InputError::InputError; };
struct IndexOutOfRange : InputError { using InputError::InputError; };
struct EmptyProduct : InputError { using InputError::InputError; };
struct ChunkingError : InputError { using InputError::InputError; };
struct DimensionError : InputError { using InputError::InputError; };
struct DomainError : InputError { using InputError::InputError; };
struct ShapeError : InputError { using InputError::InputError; };
struct NonFiniteValue : InputError { using InputError::InputError; };
struct UnboundGenerator : InputError { using InputError::InputError; };
struct ArityError : InputError { using InputError::InputError; };
struct DeadEnd : InputError { using InputError::InputError; };
struct StepCapExceeded : InputError { using InputError::InputError; };
struct CyclicWiring : InputError { using InputError::InputError; };
struct DanglingSlot : InputError { using InputError::InputError; };
struct SlotTypeMismatch : InputError { using InputError::InputError; };
// Wirings that would need wire crossings (symmetries) to realize; not
// expressible in the term grammar, so rejected up front.
struct CrossingWiring : InputError { using InputError::InputError; };
struct AllParticlesFailed : InputError { using InputError::InputError; };
struct NonFiniteGradient : InputError { using InputError::InputError; };

struct NoCandidates : InternalError { using InternalError::InternalError; };
struct InconsistentTrace : InternalError { using InternalError::InternalError; };

} // namespace freeop
