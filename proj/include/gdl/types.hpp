#pragma once

#include <vector>

namespace gdl {

// Token indices in [0, V). Maze and teacher samples start with BOS.
using TokenSequence = std::vector<int>;

} // namespace gdl
