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
#include "spotsim/fraction.hpp"

#include <algorithm>
#include <numeric>

#include "spotsim/errors.hpp"

namespace spotsim {

Fraction::Fraction(std::int64_t num, std::int64_t den) {
  if (den == 0) throw DomainError("Fraction: zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  num_ = g ? num / g : 0;
  den_ = g ? den / g : 1;
}

Fraction operator+(Fraction a, Fraction b) {
  const std::int64_t l = std::lcm(a.den_, b.den_);
  return Fraction(a.num_ * (l / a.den_) + b.num_ * (l / b.den_), l);
}

Fraction operator-(Fraction a, Fraction b) {
  return a + Fraction(-b.num_, b.den_);
}

std::strong_ordering operator<=>(const Fraction& a, const Fraction& b) {
  // Denominators stay small (LCMs of tensor degrees), no overflow risk here.
  return (a.num_ * b.den_) <=> (b.num_ * a.den_);
}

std::string Fraction::to_string() const {
  return den_ == 1 ? std::to_string(num_)
                   : std::to_string(num_) + "/" + std::to_string(den_);
}

Interval intersect(const Interval& a, const Interval& b) {
  Interval r{std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
  if (r.empty()) return Interval{Fraction(0), Fraction(0)};
  return r;
}

IntervalSet::IntervalSet(const Interval& iv) { add(iv); }

void IntervalSet::add(const Interval& iv) {
  if (iv.empty()) return;
  std::vector<Interval> out;
  Interval cur = iv;
  bool placed = false;
  for (const Interval& p : parts_) {
    if (p.hi < cur.lo) {
      out.push_back(p);
    } else if (cur.hi < p.lo) {
      if (!placed) {
        out.push_back(cur);
        placed = true;
      }
      out.push_back(p);
    } else {
      cur.lo = std::min(cur.lo, p.lo);
      cur.hi = std::max(cur.hi, p.hi);
    }
  }
  if (!placed) out.push_back(cur);
  std::sort(out.begin(), out.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  parts_ = std::move(out);
}

void IntervalSet::subtract(const Interval& iv) {
  if (iv.empty()) return;
  std::vector<Interval> out;
  for (const Interval& p : parts_) {
    Interval left{p.lo, std::min(p.hi, iv.lo)};
    Interval right{std::max(p.lo, iv.hi), p.hi};
    if (!left.empty()) out.push_back(left);
    if (!right.empty()) out.push_back(right);
  }
  parts_ = std::move(out);
}

IntervalSet IntervalSet::intersected(const Interval& iv) const {
  IntervalSet r;
  for (const Interval& p : parts_) {
    Interval x = intersect(p, iv);
    if (!x.empty()) r.parts_.push_back(x);
  }
  return r;
}

IntervalSet IntervalSet::minus(const IntervalSet& other) const {
  IntervalSet r = *this;
  for (const Interval& p : other.parts_) r.subtract(p);
  return r;
}

Fraction IntervalSet::measure() const {
  Fraction total(0);
  for (const Interval& p : parts_) total = total + p.length();
  return total;
}

bool IntervalSet::covers(const Interval& iv) const {
  if (iv.empty()) return true;
  IntervalSet need(iv);
  return need.minus(*this).empty();
}

}  // namespace spotsim
