#pragma once

#include <stdexcept>
#include <string>

namespace fbl {

struct EmptyBall : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfDomain : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidExponent : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HypothesisViolated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NegativeBoundary : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExponentOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DenominatorNonpositive : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OriginNotInZeroSet : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace fbl
