#pragma once

#include <array>
#include <optional>
#include <string>

namespace cxrtask {

/// The five task kinds, in the canonical reporting order used for mixture
/// ratios: diagnosis, detection, report, vqa, segmentation.
enum class Task { diagnosis, detection, report, vqa, segmentation };

inline constexpr std::array<Task, 5> kAllTasks = {
    Task::diagnosis, Task::detection, Task::report, Task::vqa, Task::segmentation};

std::string to_string(Task task);
std::optional<Task> task_from_string(const std::string& text);

}  // namespace cxrtask
