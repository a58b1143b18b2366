#pragma once

namespace toss2d {

inline constexpr const char* version_string = "0.1.0";

}  // namespace toss2d
