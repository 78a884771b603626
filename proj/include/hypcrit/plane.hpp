#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include "hypcrit/errors.hpp"

/// Upper half-plane geometry: points z = re + i·im with im > 0, unit-determinant
/// matrices acting by Möbius transformations, ideal points on R ∪ {∞}.
namespace hypcrit::plane {

using Complex = std::complex<double>;

struct Point {
    double re = 0.0;
    double im = 1.0;

    Complex z() const { return {re, im}; }
    friend bool operator==(const Point&, const Point&) = default;
};

/// A point of R ∪ {∞}.
struct IdealPoint {
    double x = 0.0;
    bool infinite = false;

    static IdealPoint at_infinity() { return {0.0, true}; }
    friend bool operator==(const IdealPoint&, const IdealPoint&) = default;
};

inline double distance(const Point& p, const Point& q) {
    double dx = p.re - q.re, dy = p.im - q.im;
    double chord = std::sqrt(dx * dx + dy * dy);
    return 2.0 * std::asinh(chord / (2.0 * std::sqrt(p.im * q.im)));
}

/// Real 2x2 matrix [[a, b], [c, d]] of determinant 1, identified with its negation.
struct Mat2 {
    double a = 1, b = 0, c = 0, d = 1;

    /// ad − bc with Kahan's fma correction; the naive form loses all digits once entries pass ~1e8.
    double det() const {
        double w = b * c;
        double e = std::fma(-b, c, w);
        double f = std::fma(a, d, -w);
        return f + e;
    }
    double trace() const { return a + d; }

    /// Rescales to determinant 1.
    Mat2 normalized() const {
        double dt = det();
        if (!(dt > 0.0)) throw ArgumentError("matrix must have positive determinant");
        double s = 1.0 / std::sqrt(dt);
        return {a * s, b * s, c * s, d * s};
    }
    Mat2 inverse() const { return {d, -b, -c, a}; }

    /// Product, renormalized to determinant 1 while the determinant is numerically
    /// meaningful (entries below ~3e6); beyond that the rounding of the entries
    /// swamps ad − bc and the product of two unit-determinant factors is kept as is.
    friend Mat2 operator*(const Mat2& m, const Mat2& n) {
        Mat2 p{m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d, m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
        if (p.norm2() < 1e13) return p.normalized();
        return p;
    }

    double norm2() const { return a * a + b * b + c * c + d * d; }

    Point apply(const Point& p) const {
        Complex z = p.z();
        Complex w = (a * z + b) / (c * z + d);
        // im(w) = im(z) / |cz + d|^2 computed directly is more accurate near the boundary.
        double den = std::norm(c * z + d);
        return {w.real(), p.im / den};
    }

    IdealPoint apply(const IdealPoint& p) const {
        if (p.infinite) {
            if (c == 0.0) return IdealPoint::at_infinity();
            return {a / c, false};
        }
        double den = c * p.x + d;
        if (den == 0.0) return IdealPoint::at_infinity();
        return {(a * p.x + b) / den, false};
    }

    static Mat2 diag_translation(double length) {
        return {std::exp(length / 2), 0.0, 0.0, std::exp(-length / 2)};
    }
    /// Rotation about i by angle theta (the matrix [[cos θ/2, sin θ/2], [−sin θ/2, cos θ/2]]).
    static Mat2 rotation(double theta) {
        double h = theta / 2;
        return {std::cos(h), std::sin(h), -std::sin(h), std::cos(h)};
    }
};

/// Cayley map to the unit disk, z ↦ (z − i)/(z + i); i ↦ 0, ∞ ↦ 1.
inline Complex to_disk(const Point& p) {
    Complex z = p.z();
    return (z - Complex(0, 1)) / (z + Complex(0, 1));
}
inline Point from_disk(Complex u) {
    Complex z = Complex(0, 1) * (Complex(1, 0) + u) / (Complex(1, 0) - u);
    return {z.real(), std::max(z.imag(), 0.0)};
}

/// Angle on the boundary circle of the disk model, in (−π, π].
inline double boundary_angle(const IdealPoint& p) {
    if (p.infinite) return 0.0;
    Complex u = (Complex(p.x, 0) - Complex(0, 1)) / (Complex(p.x, 0) + Complex(0, 1));
    return std::arg(u);
}
inline IdealPoint from_boundary_angle(double theta) {
    Complex u = std::polar(1.0, theta);
    if (std::abs(u - Complex(1, 0)) < 1e-15) return IdealPoint::at_infinity();
    Complex z = Complex(0, 1) * (Complex(1, 0) + u) / (Complex(1, 0) - u);
    return {z.real(), false};
}

/// Rotation about i taking the disk direction `disk_angle` to angle 0 (towards ∞).
/// Mat2::rotation(t) turns the disk model by +t about its origin.
inline Mat2 rotation_to_top(double disk_angle) { return Mat2::rotation(-disk_angle); }

/// Matrix taking p to i. Composed with a rotation it frames any geodesic.
inline Mat2 center_at(const Point& p) {
    double s = std::sqrt(p.im);
    return Mat2{1.0 / s, -p.re / s, 0.0, s};
}

/// g with g(p) = i and g(q) on the imaginary axis above i (for p ≠ q).
inline Mat2 frame_segment(const Point& p, const Point& q) {
    Mat2 m = center_at(p);
    Point w = m.apply(q);
    double ang = std::arg(to_disk(w));
    return rotation_to_top(ang) * m;
}

/// g with g(p) = i and g(ξ) = ∞.
inline Mat2 frame_ray(const Point& p, const IdealPoint& xi) {
    Mat2 m = center_at(p);
    IdealPoint w = m.apply(xi);
    return rotation_to_top(boundary_angle(w)) * m;
}

/// g with g(ξ) = 0 and g(η) = ∞ for distinct ideal points.
inline Mat2 frame_line(const IdealPoint& xi, const IdealPoint& eta) {
    Mat2 m;
    if (eta.infinite) {
        m = {1.0, -xi.x, 0.0, 1.0};
    } else if (xi.infinite) {
        m = {0.0, -1.0, 1.0, -eta.x};
    } else {
        // z ↦ (z − ξ)/(η − z) or (z − ξ)/(z − η), whichever preserves the half-plane.
        double dt = eta.x - xi.x;
        if (dt == 0.0) throw ArgumentError("line endpoints coincide");
        m = dt > 0 ? Mat2{1.0, -xi.x, -1.0, eta.x} : Mat2{1.0, -xi.x, 1.0, -eta.x};
    }
    return m.normalized();
}

/// Distance from a point to the imaginary axis.
inline double distance_to_axis(const Point& p) { return std::asinh(std::abs(p.re) / p.im); }

/// Attracting fixed point of a hyperbolic matrix.
inline IdealPoint attracting_fixed_point(const Mat2& m) {
    double tr = m.trace();
    double sgn = tr >= 0 ? 1.0 : -1.0;
    Mat2 g = sgn > 0 ? m : Mat2{-m.a, -m.b, -m.c, -m.d};
    tr = std::abs(tr);
    if (tr <= 2.0) throw ClassificationError("matrix is not hyperbolic");
    if (g.c == 0.0) {
        // z ↦ (a z + b)/d, attracting ∞ when |a| > |d|.
        if (std::abs(g.a) > std::abs(g.d)) return IdealPoint::at_infinity();
        return {g.b / (g.d - g.a), false};
    }
    double disc = std::sqrt(tr * tr - 4.0);
    double r1 = (g.a - g.d + disc) / (2.0 * g.c);
    double r2 = (g.a - g.d - disc) / (2.0 * g.c);
    // derivative 1/(c r + d)^2 < 1 at the attracting point
    double d1 = std::abs(g.c * r1 + g.d), d2 = std::abs(g.c * r2 + g.d);
    return d1 > d2 ? IdealPoint{r1, false} : IdealPoint{r2, false};
}

} // namespace hypcrit::plane
