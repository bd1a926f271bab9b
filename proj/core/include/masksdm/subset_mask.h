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

#ifndef MASKSDM_SUBSET_MASK_H_
#define MASKSDM_SUBSET_MASK_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace masksdm {

// A coalition over an ordered player set: bit i set means player i is
// VISIBLE. Used both for predictor masks and for coalitions of grouped
// players in the Shapley estimators.
class SubsetMask {
 public:
  SubsetMask() = default;
  explicit SubsetMask(std::size_t size, bool visible = false)
      : bits_(size, visible) {}

  static SubsetMask All(std::size_t size) { return SubsetMask(size, true); }
  static SubsetMask None(std::size_t size) { return SubsetMask(size, false); }

  // "1" = visible, index 0 first. Throws on characters other than 0/1.
  static SubsetMask FromBits(std::string_view bits);

  std::size_t size() const { return bits_.size(); }
  bool visible(std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, bool visible = true) { bits_[i] = visible; }
  void reset(std::size_t i) { bits_[i] = false; }

  std::size_t count() const;
  bool none() const { return count() == 0; }
  bool all() const { return count() == size(); }

  // Bitwise union; sizes must match.
  SubsetMask operator|(const SubsetMask& other) const;
  SubsetMask operator&(const SubsetMask& other) const;
  SubsetMask operator~() const;

  std::string ToBits() const;
  std::vector<std::size_t> VisibleIndices() const;

  friend bool operator==(const SubsetMask&, const SubsetMask&) = default;

 private:
  std::vector<bool> bits_;
};

}  // namespace masksdm

#endif  // MASKSDM_SUBSET_MASK_H_
