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

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace xverify {

/// Bit strings are indexed big-endian: position 0 is the most significant bit.
inline int bit_at(std::uint64_t index, int n_bits, int position) {
    return static_cast<int>((index >> (n_bits - 1 - position)) & 1U);
}

inline std::uint64_t with_bit(std::uint64_t index, int n_bits, int position, int value) {
    const std::uint64_t m = std::uint64_t{1} << (n_bits - 1 - position);
    return value != 0 ? (index | m) : (index & ~m);
}

std::string to_bitstring(std::uint64_t index, int n_bits);

/// Throws Error{Parse} on characters other than '0'/'1'.
std::uint64_t from_bitstring(std::string_view bits);

std::uint64_t index_of(const std::vector<int> &bits);
std::vector<int> bits_of(std::uint64_t index, int n_bits);

}  // namespace xverify
