#pragma once

#include <string>
#include <utility>
#include <vector>

namespace toftomo {

std::string version();
// (component, version) pairs for the library and the numerical dependencies it was built with.
std::vector<std::pair<std::string, std::string>> build_versions();

}  // namespace toftomo
