// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vnsgru {

using Tokens = std::vector<std::string>;

/// Canonical caption tokenization, shared by vocabulary construction and
/// the evaluation metrics so both sides count the same units: lowercase
/// ASCII letters, split on whitespace, strip ASCII punctuation except
/// apostrophes, keep digits and any byte >= 0x80 untouched.
Tokens tokenize(std::string_view text);

std::string join_tokens(const Tokens& tokens);

} // namespace vnsgru
