#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "fpsel/target.hpp"

namespace fpsel {

/// Curated real-number identities, registered one way each, followed by the
/// constant-folding rules.
const std::vector<RewriteRule>& math_rules();

/// Rules that do not grow the term, plus a short allow-list of same-purpose
/// rewrites (a/b to a*(1/b)), plus constant folding.
const std::vector<RewriteRule>& simplifying_rules();

/// Exact rational folding of + - * / neg over literal classes.
std::vector<RewriteRule> fold_rules();

/// Node count with pattern variables counted as 1.
std::size_t pattern_size(const Expr& e);

/// Reads `(rule NAME LHS RHS)` forms.
std::vector<RewriteRule> parse_rules(std::string_view text);
std::vector<RewriteRule> load_rules(const std::filesystem::path& path);

}  // namespace fpsel
