#pragma once

namespace aslseg {
inline constexpr const char* kVersion = "0.1.0";
}
