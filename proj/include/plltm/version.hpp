#pragma once

namespace plltm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace plltm
