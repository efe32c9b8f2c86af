#pragma once

#include <string_view>

namespace pex {

/// Prints "pex: warning: <msg>" to stderr unless warnings are silenced.
void warn(std::string_view msg);
void set_warnings_enabled(bool enabled);
/// Warnings emitted since process start (counted even when silenced).
long warning_count();

}  // namespace pex
