#pragma once

#include <string>

namespace kinetraf {

/// Locale-independent decimal rendering with 17 significant digits, enough
/// to reproduce the double bit for bit when parsed back.
std::string format_double(double value);

}  // namespace kinetraf
