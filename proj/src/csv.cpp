#include "kinetraf/csv.hpp"

#include <charconv>
#include <system_error>

namespace kinetraf {

std::string format_double(double value) {
  char buf[64];
  const auto result =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, result.ptr);
}

}  // namespace kinetraf
