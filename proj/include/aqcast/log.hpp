#pragma once

#include <functional>
#include <string>

namespace aqcast {

using WarningHandler = std::function<void(const std::string&)>;

/// Emit a warning through the installed handler (stderr by default).
void warn(const std::string& message);

/// Replace the warning handler; returns the previous one.
WarningHandler set_warning_handler(WarningHandler handler);

}  // namespace aqcast
