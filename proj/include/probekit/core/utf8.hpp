#pragma once

#include <string>
#include <string_view>

namespace probekit::utf8 {

bool is_valid(std::string_view bytes);

// Throws ValidationError on malformed input.
std::u32string decode(std::string_view bytes);
std::string encode(std::u32string_view code_points);
std::string encode(char32_t code_point);

}  // namespace probekit::utf8
