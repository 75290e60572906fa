#pragma once

#include <functional>
#include <iostream>
#include <string_view>

namespace semscan {

using WarningSink = std::function<void(std::string_view)>;

// Process-wide sink for non-fatal diagnostics (dropped tokens, empty
// documents). Defaults to stderr; tests and tools may replace it.
inline WarningSink& warning_sink() {
  static WarningSink sink = [](std::string_view msg) { std::clog << "warning: " << msg << '\n'; };
  return sink;
}

inline void warn(std::string_view msg) {
  if (auto& sink = warning_sink()) sink(msg);
}

}  // namespace semscan
