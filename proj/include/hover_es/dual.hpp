#pragma once

// Forward-mode dual numbers. Nesting Dual<Dual<T>> yields higher derivatives,
// which the averaging code uses for Lie brackets of Lie brackets.

#include <cmath>
#include <type_traits>

namespace hover_es {

template <class T>
struct Dual {
    T val{};
    T eps{};

    constexpr Dual() = default;
    constexpr Dual(T v) : val(v), eps(T{}) {}  // NOLINT(google-explicit-constructor)
    constexpr Dual(T v, T e) : val(v), eps(e) {}
    template <class U>
        requires std::is_arithmetic_v<U> && (!std::is_same_v<T, U>)
    constexpr Dual(U v) : val(T(v)), eps(T{}) {}  // NOLINT(google-explicit-constructor)

    Dual& operator+=(const Dual& o) { val += o.val; eps += o.eps; return *this; }
    Dual& operator-=(const Dual& o) { val -= o.val; eps -= o.eps; return *this; }
    Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
    Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }

    friend Dual operator+(const Dual& a, const Dual& b) { return {a.val + b.val, a.eps + b.eps}; }
    friend Dual operator-(const Dual& a, const Dual& b) { return {a.val - b.val, a.eps - b.eps}; }
    friend Dual operator-(const Dual& a) { return {-a.val, -a.eps}; }
    friend Dual operator*(const Dual& a, const Dual& b) { return {a.val * b.val, a.val * b.eps + a.eps * b.val}; }
    friend Dual operator/(const Dual& a, const Dual& b) {
        return {a.val / b.val, (a.eps * b.val - a.val * b.eps) / (b.val * b.val)};
    }
    template <class U>
        requires std::is_arithmetic_v<U>
    friend Dual operator*(const Dual& a, U s) { return {a.val * T(s), a.eps * T(s)}; }
    template <class U>
        requires std::is_arithmetic_v<U>
    friend Dual operator*(U s, const Dual& a) { return a * s; }
    template <class U>
        requires std::is_arithmetic_v<U>
    friend Dual operator/(const Dual& a, U s) { return {a.val / T(s), a.eps / T(s)}; }
    template <class U>
        requires std::is_arithmetic_v<U>
    friend Dual operator+(const Dual& a, U s) { return {a.val + T(s), a.eps}; }
    template <class U>
        requires std::is_arithmetic_v<U>
    friend Dual operator+(U s, const Dual& a) { return a + s; }
    template <class U>
        requires std::is_arithmetic_v<U>
    friend Dual operator-(const Dual& a, U s) { return {a.val - T(s), a.eps}; }
    template <class U>
        requires std::is_arithmetic_v<U>
    friend Dual operator-(U s, const Dual& a) { return {T(s) - a.val, -a.eps}; }
};

template <class T>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};

/// Underlying double of a possibly nested dual.
template <class T>
constexpr double primal(const T& x) {
    if constexpr (is_dual<T>::value) {
        return primal(x.val);
    } else {
        return static_cast<double>(x);
    }
}

template <class T>
Dual<T> atan(const Dual<T>& x) {
    using std::atan;
    return {atan(x.val), x.eps / (T(1.0) + x.val * x.val)};
}

template <class T>
Dual<T> sqrt(const Dual<T>& x) {
    using std::sqrt;
    const T r = sqrt(x.val);
    return {r, x.eps / (T(2.0) * r)};
}

template <class T>
Dual<T> abs(const Dual<T>& x) {
    return primal(x.val) < 0.0 ? -x : x;
}

}  // namespace hover_es
