#ifndef BLAYER_VERSION_HPP
#define BLAYER_VERSION_HPP

namespace blayer {

inline constexpr const char* kVersion = "0.1.0";

} // namespace blayer

#endif
