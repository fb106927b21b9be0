#pragma once

namespace ladder {

inline constexpr const char* version_string = "0.1.0";

}
