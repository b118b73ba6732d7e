#pragma once

namespace dpa {

inline constexpr const char* kVersion = "0.1.0";

} // namespace dpa
