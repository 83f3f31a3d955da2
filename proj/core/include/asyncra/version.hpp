#pragma once

#include <string_view>

namespace asyncra {

// "<semver>+g<short git revision>", fixed at configure time.
std::string_view version_string();

}  // namespace asyncra
