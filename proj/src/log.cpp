#include "delala/log.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace delala {

namespace {

std::mutex handler_mutex;
warning_handler current_handler;

}  // namespace

warning_handler set_warning_handler(warning_handler handler) {
    std::lock_guard lock(handler_mutex);
    return std::exchange(current_handler, std::move(handler));
}

void warn(std::string_view message) {
    std::lock_guard lock(handler_mutex);
    if (current_handler) {
        current_handler(message);
    } else {
        std::cerr << "warning: " << message << '\n';
    }
}

}  // namespace delala
