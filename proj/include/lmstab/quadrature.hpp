#pragma once

#include <stdexcept>
#include <vector>

#include "lmstab/mesh.hpp"

namespace lmstab {

/// Quadrature rule on the reference segment [0,1] (points carry y = 0) or on
/// the reference triangle {x,y >= 0, x+y <= 1}. Weights are positive and sum
/// to the reference measure (1 resp. 1/2).
struct QuadRule {
    std::vector<Vec2> points;
    std::vector<double> weights;
    int exactness_degree = 0;

    int size() const { return static_cast<int>(points.size()); }
};

/// Gauss-Legendre rule on [0,1] exact for polynomials of the given degree,
/// using ceil((degree+1)/2) points.
inline QuadRule gauss_segment(int degree) {
    if (degree < 0 || degree > 9) throw std::invalid_argument("gauss_segment: degree must be in [0,9]");
    const int npts = (degree + 2) / 2;
    // Nodes/weights on [-1,1].
    static const std::vector<std::vector<std::pair<double, double>>> table = {
        {{0.0, 2.0}},
        {{-0.5773502691896257645091488, 1.0}, {0.5773502691896257645091488, 1.0}},
        {{-0.7745966692414833770358531, 5.0 / 9.0}, {0.0, 8.0 / 9.0}, {0.7745966692414833770358531, 5.0 / 9.0}},
        {{-0.8611363115940525752239465, 0.3478548451374538573730639},
         {-0.3399810435848562648026658, 0.6521451548625461426269361},
         {0.3399810435848562648026658, 0.6521451548625461426269361},
         {0.8611363115940525752239465, 0.3478548451374538573730639}},
        {{-0.9061798459386639927976269, 0.2369268850561890875142640},
         {-0.5384693101056830910363144, 0.4786286704993664680412915},
         {0.0, 0.5688888888888888888888889},
         {0.5384693101056830910363144, 0.4786286704993664680412915},
         {0.9061798459386639927976269, 0.2369268850561890875142640}}};
    QuadRule rule;
    rule.exactness_degree = 2 * npts - 1;
    for (const auto& [x, w] : table[npts - 1]) {
        rule.points.push_back({0.5 * (x + 1.0), 0.0});
        rule.weights.push_back(0.5 * w);
    }
    return rule;
}

/// Symmetric rule on the reference triangle exact for the given total degree.
inline QuadRule gauss_triangle(int degree) {
    if (degree < 0 || degree > 6) throw std::invalid_argument("gauss_triangle: degree must be in [0,6]");
    QuadRule rule;
    auto orbit3 = [&rule](double a, double w) {
        // barycentric (a, b, b) with b = (1-a)/2, all three rotations
        double b = 0.5 * (1.0 - a);
        rule.points.push_back({b, b});
        rule.points.push_back({a, b});
        rule.points.push_back({b, a});
        rule.weights.insert(rule.weights.end(), 3, 0.5 * w);
    };
    auto orbit6 = [&rule](double a, double b, double w) {
        double c = 1.0 - a - b;
        const double xy[6][2] = {{b, c}, {c, b}, {a, c}, {c, a}, {a, b}, {b, a}};
        for (auto& p : xy) rule.points.push_back({p[0], p[1]});
        rule.weights.insert(rule.weights.end(), 6, 0.5 * w);
    };

    if (degree <= 1) {
        rule.points.push_back({1.0 / 3.0, 1.0 / 3.0});
        rule.weights.push_back(0.5);
        rule.exactness_degree = 1;
    } else if (degree == 2) {
        orbit3(2.0 / 3.0, 1.0 / 3.0);
        rule.exactness_degree = 2;
    } else if (degree <= 4) {
        // Dunavant degree 4, 6 points
        orbit3(0.816847572980459, 0.109951743655322);
        orbit3(0.108103018168070, 0.223381589678011);
        rule.exactness_degree = 4;
    } else if (degree == 5) {
        // Dunavant degree 5, 7 points
        rule.points.push_back({1.0 / 3.0, 1.0 / 3.0});
        rule.weights.push_back(0.5 * 0.225);
        orbit3(0.797426985353087, 0.125939180544827);
        orbit3(0.059715871789770, 0.132394152788506);
        rule.exactness_degree = 5;
    } else {
        // Dunavant degree 6, 12 points
        orbit3(0.873821971016996, 0.050844906370207);
        orbit3(0.501426509658179, 0.116786275726379);
        orbit6(0.636502499121399, 0.310352451033785, 0.082851075618374);
        rule.exactness_degree = 6;
    }
    return rule;
}

/// Triangle rule honouring requests beyond the degree-6 catalogue by applying
/// the degree-6 rule on the 4 congruent sub-triangles (used for error
/// integration of non-polynomial integrands).
inline QuadRule gauss_triangle_composite(int degree) {
    if (degree <= 6) return gauss_triangle(degree);
    QuadRule base = gauss_triangle(6);
    QuadRule rule;
    rule.exactness_degree = 6;
    const Vec2 v0{0, 0}, v1{1, 0}, v2{0, 1};
    const Vec2 m01{0.5, 0}, m12{0.5, 0.5}, m20{0, 0.5};
    const std::array<std::array<Vec2, 3>, 4> subs = {{{v0, m01, m20}, {m01, v1, m12}, {m20, m12, v2}, {m01, m12, m20}}};
    for (const auto& s : subs) {
        for (int q = 0; q < base.size(); ++q) {
            Vec2 p = base.points[q];
            rule.points.push_back(s[0] + p.x * (s[1] - s[0]) + p.y * (s[2] - s[0]));
            rule.weights.push_back(0.25 * base.weights[q]);
        }
    }
    return rule;
}

}  // namespace lmstab
