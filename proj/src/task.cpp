#include "cxrtask/task.hpp"

#include <stdexcept>

namespace cxrtask {

std::string to_string(Task task) {
    switch (task) {
        case Task::diagnosis: return "diagnosis";
        case Task::detection: return "detection";
        case Task::report: return "report";
        case Task::vqa: return "vqa";
        case Task::segmentation: return "segmentation";
    }
    throw std::logic_error("unreachable task");
}

std::optional<Task> task_from_string(const std::string& text) {
    for (Task t : kAllTasks) {
        if (to_string(t) == text) return t;
    }
    return std::nullopt;
}

}  // namespace cxrtask
