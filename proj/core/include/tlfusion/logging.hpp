#pragma once

#include <string_view>

namespace tlfusion {

// Thin wrappers over the library logger. The level comes from the
// TLFUSION_LOG_LEVEL environment variable (trace..critical, off); default warn.
void log_debug(std::string_view message);
void log_info(std::string_view message);
void log_warn(std::string_view message);

}  // namespace tlfusion
