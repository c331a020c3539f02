#pragma once

// Eigenvalues of small real matrices: a closed-form cubic for the 3x3 case and a
// shifted Hessenberg QR (applied to the companion matrix) as an independent check.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "hover_es/error.hpp"

namespace hover_es {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Complex = std::complex<double>;

/// Monic characteristic polynomial lambda^3 + c[0] lambda^2 + c[1] lambda + c[2].
inline std::array<double, 3> characteristic_polynomial(const Mat3& a) {
    const double tr = a[0][0] + a[1][1] + a[2][2];
    const double minors = a[0][0] * a[1][1] - a[0][1] * a[1][0] + a[0][0] * a[2][2] - a[0][2] * a[2][0] +
                          a[1][1] * a[2][2] - a[1][2] * a[2][1];
    const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                       a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                       a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    return {-tr, minors, -det};
}

inline Complex eval_cubic(const std::array<double, 3>& c, Complex x) {
    return ((x + c[0]) * x + c[1]) * x + c[2];
}

/// Sorts by modulus, then real part, then imaginary part.
inline void sort_eigenvalues(std::array<Complex, 3>& v) {
    std::sort(v.begin(), v.end(), [](const Complex& p, const Complex& q) {
        if (std::abs(p) != std::abs(q)) return std::abs(p) < std::abs(q);
        if (p.real() != q.real()) return p.real() < q.real();
        return p.imag() < q.imag();
    });
}

namespace eig_detail {

inline double polish_real(const std::array<double, 3>& c, double x) {
    for (int i = 0; i < 4; ++i) {
        const double p = ((x + c[0]) * x + c[1]) * x + c[2];
        const double dp = (3.0 * x + 2.0 * c[0]) * x + c[1];
        if (dp == 0.0) break;
        const double nx = x - p / dp;
        if (!std::isfinite(nx)) break;
        if (std::abs(((nx + c[0]) * nx + c[1]) * nx + c[2]) >= std::abs(p)) break;
        x = nx;
    }
    return x;
}

inline Complex polish_complex(const std::array<double, 3>& c, Complex x) {
    for (int i = 0; i < 4; ++i) {
        const Complex p = eval_cubic(c, x);
        const Complex dp = (3.0 * x + 2.0 * c[0]) * x + c[1];
        if (std::abs(dp) == 0.0) break;
        const Complex nx = x - p / dp;
        if (!std::isfinite(nx.real()) || !std::isfinite(nx.imag())) break;
        if (std::abs(eval_cubic(c, nx)) >= std::abs(p)) break;
        x = nx;
    }
    return x;
}

/// One real root of the monic cubic, the one of largest modulus among the real roots
/// the closed form produces, so deflation is stable.
inline double real_root(const std::array<double, 3>& c) {
    const double b = c[0];
    const double q = (b * b - 3.0 * c[1]) / 9.0;
    const double r = (2.0 * b * b * b - 9.0 * b * c[1] + 27.0 * c[2]) / 54.0;
    const double q3 = q * q * q;
    if (r * r < q3) {
        // Three real roots: trigonometric form.
        const double theta = std::acos(std::clamp(r / std::sqrt(q3), -1.0, 1.0));
        const double s = -2.0 * std::sqrt(q);
        std::array<double, 3> roots{s * std::cos(theta / 3.0) - b / 3.0,
                                    s * std::cos((theta + 2.0 * std::numbers::pi) / 3.0) - b / 3.0,
                                    s * std::cos((theta - 2.0 * std::numbers::pi) / 3.0) - b / 3.0};
        return *std::max_element(roots.begin(), roots.end(),
                                 [](double u, double v) { return std::abs(u) < std::abs(v); });
    }
    // One real root: Cardano with the cancellation-free sign choice.
    const double big_a = -std::copysign(std::cbrt(std::abs(r) + std::sqrt(r * r - q3)), r);
    const double big_b = big_a == 0.0 ? 0.0 : q / big_a;
    return (big_a + big_b) - b / 3.0;
}

}  // namespace eig_detail

/// Roots of lambda^3 + c0 lambda^2 + c1 lambda + c2 in closed form, Newton-polished.
inline std::array<Complex, 3> cubic_roots(const std::array<double, 3>& c) {
    using namespace eig_detail;
    std::array<Complex, 3> out;
    if (c[2] == 0.0) {
        // Exact zero root; the rest solve lambda^2 + c0 lambda + c1.
        out[0] = 0.0;
        const double disc = c[0] * c[0] - 4.0 * c[1];
        if (disc >= 0.0) {
            const double t = -0.5 * (c[0] + std::copysign(std::sqrt(disc), c[0]));
            out[1] = t;
            out[2] = t == 0.0 ? 0.0 : c[1] / t;
        } else {
            out[1] = Complex(-0.5 * c[0], 0.5 * std::sqrt(-disc));
            out[2] = std::conj(out[1]);
        }
        sort_eigenvalues(out);
        return out;
    }
    const double r0 = polish_real(c, real_root(c));
    // Deflate: (lambda - r0)(lambda^2 + p lambda + q).
    const double p = c[0] + r0;
    const double q = std::abs(r0) > 1.0 && std::abs(c[2]) > 0.0 ? -c[2] / r0 : c[1] + r0 * p;
    const double disc = p * p - 4.0 * q;
    out[0] = r0;
    if (disc >= 0.0) {
        const double t = -0.5 * (p + std::copysign(std::sqrt(disc), p));
        const double x1 = t;
        const double x2 = t == 0.0 ? 0.0 : q / t;
        out[1] = polish_real(c, x1);
        out[2] = polish_real(c, x2);
    } else {
        const Complex z = polish_complex(c, Complex(-0.5 * p, 0.5 * std::sqrt(-disc)));
        out[1] = z;
        out[2] = std::conj(z);
    }
    sort_eigenvalues(out);
    return out;
}

inline std::array<Complex, 3> eigenvalues_cubic(const Mat3& a) { return cubic_roots(characteristic_polynomial(a)); }

/// Eigenvalues of a real upper-Hessenberg matrix (row-major n x n) by balancing and
/// the Francis double-shift QR iteration.
inline std::vector<Complex> hessenberg_eigenvalues(std::vector<double> h, int n) {
    if (n <= 0 || static_cast<int>(h.size()) != n * n) throw DomainError("hessenberg_eigenvalues: bad dimensions");
    // 1-based accessor keeps the iteration close to its textbook form.
    auto a = [&](int i, int j) -> double& { return h[static_cast<std::size_t>((i - 1) * n + (j - 1))]; };

    // Balance by powers of two.
    constexpr double radix = 2.0;
    bool done = false;
    while (!done) {
        done = true;
        for (int i = 1; i <= n; ++i) {
            double r = 0.0;
            double c = 0.0;
            for (int j = 1; j <= n; ++j) {
                if (j == i) continue;
                c += std::abs(a(j, i));
                r += std::abs(a(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= radix * radix;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                for (int j = 1; j <= n; ++j) a(i, j) /= f;
                for (int j = 1; j <= n; ++j) a(j, i) *= f;
            }
        }
    }

    std::vector<Complex> out(static_cast<std::size_t>(n));
    auto put = [&](int i, double re, double im) { out[static_cast<std::size_t>(i - 1)] = Complex(re, im); };

    double anorm = 0.0;
    for (int i = 1; i <= n; ++i) {
        for (int j = std::max(i - 1, 1); j <= n; ++j) anorm += std::abs(a(i, j));
    }
    int nn = n;
    double t = 0.0;
    double p = 0.0, q = 0.0, r = 0.0, s = 0.0, w = 0.0, x = 0.0, y = 0.0, z = 0.0;
    while (nn >= 1) {
        int its = 0;
        int l = 0;
        do {
            for (l = nn; l >= 2; --l) {
                s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
                if (s == 0.0) s = anorm;
                if (std::abs(a(l, l - 1)) + s == s) {
                    a(l, l - 1) = 0.0;
                    break;
                }
            }
            x = a(nn, nn);
            if (l == nn) {
                put(nn, x + t, 0.0);
                --nn;
            } else {
                y = a(nn - 1, nn - 1);
                w = a(nn, nn - 1) * a(nn - 1, nn);
                if (l == nn - 1) {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + std::copysign(z, p);
                        put(nn - 1, x + z, 0.0);
                        put(nn, z != 0.0 ? x - w / z : x + z, 0.0);
                    } else {
                        put(nn - 1, x + p, z);
                        put(nn, x + p, -z);
                    }
                    nn -= 2;
                } else {
                    if (its == 60) throw IntegrationError("hessenberg_eigenvalues: QR iteration did not converge");
                    if (its == 10 || its == 20) {
                        // Exceptional shift.
                        t += x;
                        for (int i = 1; i <= nn; ++i) a(i, i) -= x;
                        s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
                        y = x = 0.75 * s;
                        w = -0.4375 * s * s;
                    }
                    ++its;
                    int m = nn - 2;
                    for (; m >= l; --m) {
                        z = a(m, m);
                        r = x - z;
                        s = y - z;
                        p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
                        q = a(m + 1, m + 1) - z - r - s;
                        r = a(m + 2, m + 1);
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) break;
                        const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) +
                                                        std::abs(a(m + 1, m + 1)));
                        if (u + v == v) break;
                    }
                    for (int i = m + 2; i <= nn; ++i) {
                        a(i, i - 2) = 0.0;
                        if (i != m + 2) a(i, i - 3) = 0.0;
                    }
                    for (int k = m; k <= nn - 1; ++k) {
                        if (k != m) {
                            p = a(k, k - 1);
                            q = a(k + 1, k - 1);
                            r = 0.0;
                            if (k != nn - 1) r = a(k + 2, k - 1);
                            x = std::abs(p) + std::abs(q) + std::abs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        s = std::copysign(std::sqrt(p * p + q * q + r * r), p);
                        if (s == 0.0) continue;
                        if (k == m) {
                            if (l != m) a(k, k - 1) = -a(k, k - 1);
                        } else {
                            a(k, k - 1) = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for (int j = k; j <= nn; ++j) {
                            p = a(k, j) + q * a(k + 1, j);
                            if (k != nn - 1) {
                                p += r * a(k + 2, j);
                                a(k + 2, j) -= p * z;
                            }
                            a(k + 1, j) -= p * y;
                            a(k, j) -= p * x;
                        }
                        const int mmin = nn < k + 3 ? nn : k + 3;
                        for (int i = l; i <= mmin; ++i) {
                            p = x * a(i, k) + y * a(i, k + 1);
                            if (k != nn - 1) {
                                p += z * a(i, k + 2);
                                a(i, k + 2) -= p * r;
                            }
                            a(i, k + 1) -= p * q;
                            a(i, k) -= p;
                        }
                    }
                }
            }
        } while (l < nn - 1);
    }
    return out;
}

/// Roots of the monic cubic via its companion matrix.
inline std::array<Complex, 3> companion_roots(const std::array<double, 3>& c) {
    std::vector<double> m{-c[0], -c[1], -c[2],
                          1.0,   0.0,   0.0,
                          0.0,   1.0,   0.0};
    const auto v = hessenberg_eigenvalues(std::move(m), 3);
    std::array<Complex, 3> out{v[0], v[1], v[2]};
    sort_eigenvalues(out);
    return out;
}

/// 1-norm condition number; infinity for a singular matrix.
inline double condition_estimate(const Mat3& a) {
    const double det = -characteristic_polynomial(a)[2];
    auto norm1 = [](const Mat3& m) {
        double best = 0.0;
        for (int j = 0; j < 3; ++j) best = std::max(best, std::abs(m[0][j]) + std::abs(m[1][j]) + std::abs(m[2][j]));
        return best;
    };
    if (det == 0.0) return std::numeric_limits<double>::infinity();
    Mat3 inv{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const int i1 = (j + 1) % 3, i2 = (j + 2) % 3, j1 = (i + 1) % 3, j2 = (i + 2) % 3;
            inv[i][j] = (a[i1][j1] * a[i2][j2] - a[i1][j2] * a[i2][j1]) / det;
        }
    }
    return norm1(a) * norm1(inv);
}

}  // namespace hover_es
