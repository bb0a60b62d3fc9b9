#pragma once

#include <string>

namespace daestab {

/// All numeric CLI/CSV output goes through this: 12 significant digits,
/// locale-independent, deterministic.
std::string fmt_num(double v);

}  // namespace daestab
