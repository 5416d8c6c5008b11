#ifndef SPADSIM_VERSION_HPP
#define SPADSIM_VERSION_HPP

namespace spadsim {
inline constexpr const char* kVersion = "spadsim 0.1.0";
}

#endif
