// Copyright 2026 The masksdm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "masksdm/subset_mask.h"

#include <algorithm>

#include "masksdm/error.h"

namespace masksdm {

SubsetMask SubsetMask::FromBits(std::string_view bits) {
  SubsetMask mask(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      mask.set(i);
    } else if (bits[i] != '0') {
      throw Error(ErrorCode::kParse,
                  "mask bits must be 0/1, got '" + std::string(bits) + "'");
    }
  }
  return mask;
}

std::size_t SubsetMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
}

SubsetMask SubsetMask::operator|(const SubsetMask& other) const {
  if (other.size() != size()) {
    throw Error(ErrorCode::kShapeMismatch, "mask size mismatch");
  }
  SubsetMask out(size());
  for (std::size_t i = 0; i < size(); ++i) out.set(i, bits_[i] || other.bits_[i]);
  return out;
}

SubsetMask SubsetMask::operator&(const SubsetMask& other) const {
  if (other.size() != size()) {
    throw Error(ErrorCode::kShapeMismatch, "mask size mismatch");
  }
  SubsetMask out(size());
  for (std::size_t i = 0; i < size(); ++i) out.set(i, bits_[i] && other.bits_[i]);
  return out;
}

SubsetMask SubsetMask::operator~() const {
  SubsetMask out(size());
  for (std::size_t i = 0; i < size(); ++i) out.set(i, !bits_[i]);
  return out;
}

std::string SubsetMask::ToBits() const {
  std::string s(size(), '0');
  for (std::size_t i = 0; i < size(); ++i) {
    if (bits_[i]) s[i] = '1';
  }
  return s;
}

std::vector<std::size_t> SubsetMask::VisibleIndices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (bits_[i]) out.push_back(i);
  }
  return out;
}

}  // namespace masksdm
