#pragma once

namespace aqkd {

inline constexpr const char* kVersion = "1.0.0";

}
