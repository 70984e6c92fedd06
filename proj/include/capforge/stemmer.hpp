#pragma once

#include <string>
#include <string_view>

namespace capforge {

/// Porter suffix-stripping stemmer (the widely distributed reference
/// variant, including its "bli" -> "ble" and "logi" -> "log" rules).
/// Words that are not purely [a-z], or shorter than three letters, are
/// returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace capforge
