#pragma once

#include <optional>
#include <string_view>

namespace hearth::data {

// Data files compiled in at configure time, keyed by their path under data/.
std::optional<std::string_view> embedded(std::string_view name);

}  // namespace hearth::data
