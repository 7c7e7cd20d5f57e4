#pragma once

#include <stdexcept>
#include <string>

namespace vgb {

// Base class for every error the library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace vgb
