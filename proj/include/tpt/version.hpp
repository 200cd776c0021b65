#ifndef TPT_VERSION_HPP
#define TPT_VERSION_HPP

namespace tpt {

inline constexpr const char* kVersion = "0.1.0";

}

#endif  // TPT_VERSION_HPP
