#include "robustcurve/core/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>

#include <cstdlib>
#include <string>

namespace robustcurve::core {

spdlog::logger& log() {
    static std::shared_ptr<spdlog::logger> instance = [] {
        auto logger = std::make_shared<spdlog::logger>(
            "robustcurve", std::make_shared<spdlog::sinks::stderr_sink_mt>());
        logger->set_pattern("[%l] %v");
        auto level = spdlog::level::warn;
        if (const char* env = std::getenv("ROBUSTCURVE_LOG")) {
            level = spdlog::level::from_str(env);
        }
        logger->set_level(level);
        return logger;
    }();
    return *instance;
}

}  // namespace robustcurve::core
