#pragma once

#define TREEMAX_VERSION_MAJOR 0
#define TREEMAX_VERSION_MINOR 1
#define TREEMAX_VERSION_PATCH 0
#define TREEMAX_VERSION_STRING "0.1.0"

namespace treemax {

inline const char* version() { return TREEMAX_VERSION_STRING; }

} // namespace treemax
