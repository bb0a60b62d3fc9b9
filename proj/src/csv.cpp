#include "daestab/csv.hpp"

#include <cstdio>

namespace daestab {

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace daestab
