#include "cte/errors.hpp"

namespace cte {

const char* to_string(ErrorClass cls) noexcept {
    switch (cls) {
    case ErrorClass::kIo: return "io";
    case ErrorClass::kValidation: return "validation";
    case ErrorClass::kDegenerate: return "degenerate";
    }
    return "unknown";
}

} // namespace cte
