#pragma once

#include <spdlog/spdlog.h>

#include <memory>

namespace robustcurve::core {

/// Shared diagnostic logger writing to stderr. Verbosity comes from the
/// ROBUSTCURVE_LOG environment variable (trace, debug, info, warn, error,
/// off); default is warn.
spdlog::logger& log();

}  // namespace robustcurve::core
