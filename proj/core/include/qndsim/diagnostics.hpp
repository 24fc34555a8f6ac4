#pragma once

#include <functional>
#include <string_view>

namespace qndsim {

using WarningHandler = std::function<void(std::string_view)>;

/// Installs a process-wide sink for non-fatal numerical warnings and returns
/// the previous one. The default handler writes to stderr.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(std::string_view message);

}  // namespace qndsim
