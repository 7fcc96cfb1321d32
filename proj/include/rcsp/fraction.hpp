#pragma once

#include <cstdint>
#include <numeric>

namespace rcsp {

/// Exact fraction used for constraint-satisfaction values. Kept unreduced
/// (numerator = satisfied count, denominator = constraint count); comparisons
/// cross-multiply so 1/2 == 2/4.
struct Fraction {
    std::int64_t num{0};
    std::int64_t den{1};

    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool is_one() const { return num == den; }
    bool is_zero() const { return num == 0; }

    friend bool operator==(const Fraction& a, const Fraction& b) {
        return a.num * b.den == b.num * a.den;
    }
    friend bool operator!=(const Fraction& a, const Fraction& b) { return !(a == b); }
    friend bool operator<(const Fraction& a, const Fraction& b) {
        return a.num * b.den < b.num * a.den;
    }
    friend bool operator<=(const Fraction& a, const Fraction& b) {
        return a.num * b.den <= b.num * a.den;
    }
    friend bool operator>(const Fraction& a, const Fraction& b) { return b < a; }
    friend bool operator>=(const Fraction& a, const Fraction& b) { return b <= a; }
};

}  // namespace rcsp
