#pragma once

#include <cmath>
#include <compare>
#include <ostream>

#include "berezin/error.hpp"

namespace berezin {

/// A real number or +infinity. The infinite state is a tag, never an overflowed double,
/// and -infinity is not representable (values of proper convex functions never need it).
class ExtendedReal {
public:
    constexpr ExtendedReal() = default;
    constexpr ExtendedReal(double v) : value_(v) {}  // NOLINT(google-explicit-constructor)

    static constexpr ExtendedReal infinity() {
        ExtendedReal r;
        r.infinite_ = true;
        return r;
    }

    constexpr bool is_finite() const { return !infinite_; }
    constexpr bool is_infinite() const { return infinite_; }

    /// Finite value; throws DomainError on +inf.
    double value() const {
        if (infinite_) throw DomainError("ExtendedReal::value() called on +inf");
        return value_;
    }

    /// Finite value, or IEEE +inf for interop with numeric code that tolerates it.
    double to_double() const { return infinite_ ? HUGE_VAL : value_; }

    friend ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
        if (a.infinite_ || b.infinite_) return infinity();
        return {a.value_ + b.value_};
    }

    // inf - finite = inf; anything - inf is not representable (inf - inf is undefined,
    // finite - inf would be -inf).
    friend ExtendedReal operator-(ExtendedReal a, ExtendedReal b) {
        if (b.infinite_) {
            throw DomainError(a.infinite_ ? "ExtendedReal: inf - inf is undefined"
                                          : "ExtendedReal: finite - inf is not representable");
        }
        if (a.infinite_) return infinity();
        return {a.value_ - b.value_};
    }

    /// Scaling by a nonnegative factor, with the convex-analysis convention 0 * inf = 0.
    ExtendedReal scaled(double c) const {
        if (c < 0.0) throw DomainError("ExtendedReal: negative scaling of +inf-valued quantity");
        if (infinite_) return c == 0.0 ? ExtendedReal{0.0} : infinity();
        return {c * value_};
    }

    friend bool operator==(ExtendedReal a, ExtendedReal b) {
        if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
        return a.value_ == b.value_;
    }

    friend std::partial_ordering operator<=>(ExtendedReal a, ExtendedReal b) {
        if (a.infinite_ && b.infinite_) return std::partial_ordering::equivalent;
        if (a.infinite_) return std::partial_ordering::greater;
        if (b.infinite_) return std::partial_ordering::less;
        return a.value_ <=> b.value_;
    }

    friend std::ostream& operator<<(std::ostream& os, ExtendedReal x) {
        if (x.infinite_) return os << "inf";
        return os << x.value_;
    }

private:
    double value_ = 0.0;
    bool infinite_ = false;
};

inline ExtendedReal max(ExtendedReal a, ExtendedReal b) { return (a < b) ? b : a; }
inline ExtendedReal min(ExtendedReal a, ExtendedReal b) { return (b < a) ? b : a; }

}  // namespace berezin
