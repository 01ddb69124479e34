#pragma once

#include <functional>
#include <string_view>

namespace delala {

using warning_handler = std::function<void(std::string_view)>;

/// Replaces the process-wide warning sink. Passing an empty handler restores
/// the default, which writes to stderr. Returns the previous handler.
warning_handler set_warning_handler(warning_handler handler);

void warn(std::string_view message);

}  // namespace delala
