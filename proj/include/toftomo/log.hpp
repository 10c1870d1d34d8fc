#pragma once

#include <functional>
#include <string>

namespace toftomo {

using WarningSink = std::function<void(const std::string&)>;

// Replaces the process-wide warning sink; an empty sink silences warnings.
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);
// Emits the message the first time a given tag is seen in this process.
void warn_once(const std::string& tag, const std::string& message);

}  // namespace toftomo
