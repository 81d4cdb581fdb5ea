// Copyright 2026 The xverify Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xverify/bits.hpp"

#include "xverify/error.hpp"

namespace xverify {

std::string to_bitstring(std::uint64_t index, int n_bits) {
    std::string s(static_cast<std::size_t>(n_bits), '0');
    for (int p = 0; p < n_bits; ++p) {
        if (bit_at(index, n_bits, p) != 0) s[static_cast<std::size_t>(p)] = '1';
    }
    return s;
}

std::uint64_t from_bitstring(std::string_view bits) {
    if (bits.size() > 63) throw Error(ErrorKind::kParse, "bit string too long");
    std::uint64_t index = 0;
    for (char c : bits) {
        if (c != '0' && c != '1') throw Error(ErrorKind::kParse, "bad bit string '" + std::string(bits) + "'");
        index = (index << 1U) | static_cast<std::uint64_t>(c == '1');
    }
    return index;
}

std::uint64_t index_of(const std::vector<int> &bits) {
    std::uint64_t index = 0;
    for (int b : bits) index = (index << 1U) | static_cast<std::uint64_t>(b & 1);
    return index;
}

std::vector<int> bits_of(std::uint64_t index, int n_bits) {
    std::vector<int> out(static_cast<std::size_t>(n_bits));
    for (int p = 0; p < n_bits; ++p) out[static_cast<std::size_t>(p)] = bit_at(index, n_bits, p);
    return out;
}

}  // namespace xverify
