#ifndef SEWERSIM_GEOMETRY_HPP
#define SEWERSIM_GEOMETRY_HPP

#include <cmath>
#include <stdexcept>

namespace sewersim {

inline constexpr double kPi = 3.14159265358979323846;

/**
 * Closed-form geometry of a circular pipe section.
 *
 * Depth y is measured from the pipe invert; valid range is [0, D].
 * Heads above the crown are handled by the Preissmann slot in the
 * dynamic solver, not here.
 */
struct SectionGeometry {
    double diameter = 0.0;

    explicit SectionGeometry(double d) : diameter(d) {
        if (!(d > 0.0)) throw std::invalid_argument("section diameter must be positive");
    }

    double full_area() const { return 0.25 * kPi * diameter * diameter; }
    double full_hyd_radius() const { return 0.25 * diameter; }
    double full_perimeter() const { return kPi * diameter; }

    // Central angle subtended by the free surface chord.
    double theta(double y) const {
        double r = 2.0 * y / diameter;
        if (r < 0.0) r = 0.0;
        if (r > 2.0) r = 2.0;
        return 2.0 * std::acos(1.0 - r);
    }

    double area(double y) const {
        check_depth(y);
        double th = theta(y);
        return diameter * diameter / 8.0 * (th - std::sin(th));
    }

    double wetted_perimeter(double y) const {
        check_depth(y);
        return 0.5 * diameter * theta(y);
    }

    double hyd_radius(double y) const {
        check_depth(y);
        if (y <= 0.0) return 0.0;
        double th = theta(y);
        if (th <= 0.0) return 0.0;
        return diameter / 4.0 * (1.0 - std::sin(th) / th);
    }

    // Free-surface top width.
    double top_width(double y) const {
        check_depth(y);
        double th = theta(y);
        return diameter * std::sin(0.5 * th);
    }

    // Depth from flow area, by bisection on the monotone area curve.
    double depth_of_area(double a) const {
        double af = full_area();
        if (a <= 0.0) return 0.0;
        if (a >= af) return diameter;
        double lo = 0.0, hi = diameter;
        for (int i = 0; i < 60; ++i) {
            double mid = 0.5 * (lo + hi);
            (area(mid) < a ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

private:
    void check_depth(double y) const {
        if (y < 0.0 || y > diameter * (1.0 + 1e-12))
            throw std::out_of_range("section depth outside [0, D]");
    }
};

// Manning conveyance at depth y: (1/n) * A * R^(2/3), SI units.
inline double manning_conveyance(const SectionGeometry& sec, double n, double y) {
    double a = sec.area(y);
    if (a <= 0.0) return 0.0;
    return a * std::pow(sec.hyd_radius(y), 2.0 / 3.0) / n;
}

// Manning full-flow discharge for a circular pipe on slope s0.
inline double manning_full_flow(double diameter, double n, double s0) {
    if (!(s0 > 0.0)) throw std::invalid_argument("full-flow capacity requires S0 > 0");
    if (!(n > 0.0)) throw std::invalid_argument("manning n must be positive");
    SectionGeometry sec(diameter);
    return sec.full_area() * std::pow(sec.full_hyd_radius(), 2.0 / 3.0) / n * std::sqrt(s0);
}

// Normal depth: smallest y with (1/n) A R^(2/3) sqrt(S0) >= q.  The circular
// rating peaks near 0.94 D, so bisect on the rising limb only.
inline double normal_depth(double diameter, double n, double s0, double q) {
    if (!(s0 > 0.0)) throw std::invalid_argument("normal depth requires S0 > 0");
    if (q <= 0.0) return 0.0;
    SectionGeometry sec(diameter);
    double root_s = std::sqrt(s0);
    double y_peak = 0.9381 * diameter;
    if (manning_conveyance(sec, n, y_peak) * root_s <= q) return diameter;
    double lo = 0.0, hi = y_peak;
    for (int i = 0; i < 60; ++i) {
        double mid = 0.5 * (lo + hi);
        (manning_conveyance(sec, n, mid) * root_s < q ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Critical depth: y with Q^2 T / (g A^3) = 1; A^3/T is monotone in y.
inline double critical_depth(double diameter, double q, double g = 9.81) {
    if (q <= 0.0) return 0.0;
    SectionGeometry sec(diameter);
    double target = q * q / g;
    auto a3_over_t = [&](double y) {
        double a = sec.area(y);
        double t = sec.top_width(y);
        if (t <= 1e-12) t = 1e-12;
        return a * a * a / t;
    };
    if (a3_over_t(diameter * (1.0 - 1e-9)) <= target) return diameter;
    double lo = 0.0, hi = diameter * (1.0 - 1e-9);
    for (int i = 0; i < 60; ++i) {
        double mid = 0.5 * (lo + hi);
        (a3_over_t(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Spec-level convenience wrappers.
inline double area_of_depth(double diameter, double y) {
    return SectionGeometry(diameter).area(y);
}

inline double hyd_radius_of_depth(double diameter, double y) {
    return SectionGeometry(diameter).hyd_radius(y);
}

} // namespace sewersim

#endif
