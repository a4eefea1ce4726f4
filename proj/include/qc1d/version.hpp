#pragma once

namespace qc1d {

inline constexpr const char* version_string = "0.1.0";

}  // namespace qc1d
