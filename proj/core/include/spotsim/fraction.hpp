/* Copyright 2026 The spotsim Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef SPOTSIM_FRACTION_HPP_
#define SPOTSIM_FRACTION_HPP_

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace spotsim {

// Exact rational in lowest terms with a positive denominator. Shard
// boundaries are k/M fractions, so interval arithmetic stays exact.
class Fraction {
 public:
  constexpr Fraction() = default;
  Fraction(std::int64_t num, std::int64_t den = 1);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend Fraction operator+(Fraction a, Fraction b);
  friend Fraction operator-(Fraction a, Fraction b);
  friend bool operator==(const Fraction& a, const Fraction& b) = default;
  friend std::strong_ordering operator<=>(const Fraction& a, const Fraction& b);

  std::string to_string() const;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

// Half-open [lo, hi) sub-interval of [0, 1).
struct Interval {
  Fraction lo;
  Fraction hi;

  bool empty() const { return !(lo < hi); }
  Fraction length() const { return empty() ? Fraction(0) : hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

Interval intersect(const Interval& a, const Interval& b);

// Sorted, disjoint, non-adjacent union of intervals.
class IntervalSet {
 public:
  IntervalSet() = default;
  explicit IntervalSet(const Interval& iv);

  void add(const Interval& iv);
  void subtract(const Interval& iv);
  IntervalSet intersected(const Interval& iv) const;
  IntervalSet minus(const IntervalSet& other) const;
  Fraction measure() const;
  bool covers(const Interval& iv) const;
  bool empty() const { return parts_.empty(); }
  const std::vector<Interval>& parts() const { return parts_; }

 private:
  std::vector<Interval> parts_;
};

}  // namespace spotsim

#endif  // SPOTSIM_FRACTION_HPP_
