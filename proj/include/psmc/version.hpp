#pragma once

namespace psmc {

constexpr const char* kToolName = "psmc";
constexpr const char* kToolVersion = "0.1.0";

}  // namespace psmc
