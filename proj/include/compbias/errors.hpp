#pragma once

#include <stdexcept>
#include <string>

namespace compbias {

struct CountExceedsLimit : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotABijection : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct InvalidK : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct InvalidSpace : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EmptySequence : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EmptyCurve : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DegenerateInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct LengthMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ShapeMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct InvalidSize : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct InputCollision : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyData : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace compbias
