#pragma once

#include <string_view>

// Default data files compiled into the library from data/rules/.
namespace notamkit::resources {

std::string_view qcode_lexicon();
std::string_view rule_set();
std::string_view rewrite_rules();
std::string_view schema_rules();

}  // namespace notamkit::resources
