#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bellnoise {

// Exact signed rational with canonical form: gcd(num, den) = 1, den > 0.
// Coefficient tables stay bit-reproducible and serialization round-trips
// exactly; evaluation promotes to double at the last moment.
class Rational {
public:
    constexpr Rational() = default;
    constexpr Rational(std::int64_t value) : num_(value) {}

    Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
        if (den_ == 0) throw std::invalid_argument("rational with zero denominator");
        normalize();
    }

    std::int64_t num() const noexcept { return num_; }
    std::int64_t den() const noexcept { return den_; }

    bool is_zero() const noexcept { return num_ == 0; }
    bool positive() const noexcept { return num_ > 0; }

    double to_double() const noexcept {
        return static_cast<double>(num_) / static_cast<double>(den_);
    }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.num_, a.den_ * b.den_);
    }
    friend Rational operator-(const Rational& a) { return Rational(-a.num_, a.den_); }

    friend bool operator==(const Rational& a, const Rational& b) noexcept {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) noexcept { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) noexcept {
        return a.num_ * b.den_ < b.num_ * a.den_;
    }

    // "n" for integers, "n/d" otherwise, sign always on the numerator.
    std::string str() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

    // Accepts decimal integers and p/q fractions; anything else is rejected
    // so that a stray float literal in an input file fails loudly.
    static Rational parse(std::string_view text) {
        auto is_int = [](std::string_view s) {
            if (!s.empty() && (s.front() == '+' || s.front() == '-')) s.remove_prefix(1);
            if (s.empty()) return false;
            for (char c : s)
                if (c < '0' || c > '9') return false;
            return true;
        };
        const auto slash = text.find('/');
        if (slash == std::string_view::npos) {
            if (!is_int(text)) throw std::invalid_argument("not a rational literal: " + std::string(text));
            return Rational(std::stoll(std::string(text)));
        }
        const auto num = text.substr(0, slash);
        const auto den = text.substr(slash + 1);
        if (!is_int(num) || !is_int(den))
            throw std::invalid_argument("not a rational literal: " + std::string(text));
        return Rational(std::stoll(std::string(num)), std::stoll(std::string(den)));
    }

private:
    void normalize() {
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        const std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
        if (num_ == 0) den_ = 1;
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

} // namespace bellnoise
