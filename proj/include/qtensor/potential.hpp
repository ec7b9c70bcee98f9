#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "tensor_core.hpp"

namespace qtensor {

inline double alpha_from_params(double A, double B, double C) {
    if (!(C > 0)) throw std::invalid_argument("alpha_from_params: C must be positive");
    double rad = B * B / (C * C) - 2.0 * A / C;
    if (rad < 0) throw std::invalid_argument("alpha_from_params: negative radicand");
    return std::sqrt(rad);
}

// Nonzero root of 3A - B s + 2C s^2: the scalar order parameter of the uniform
// uniaxial critical point.
inline double uniaxial_critical_s(double A, double B, double C) {
    double disc = B * B - 24.0 * A * C;
    if (disc < 0) throw std::invalid_argument("uniaxial_critical_s: no real root");
    return (B + std::sqrt(disc)) / (4.0 * C);
}

struct PotentialParams {
    double A = -0.2, B = 1.0, C = 1.0;
    double epsilon = 1e-2, gamma = 1.0;
    double alpha = std::sqrt(1.4);
    double alpha1 = 1.19, alpha2 = 1.2;
    double S1 = 16.8 * std::sqrt(3.0), S3 = 208.0;
    double psi3_tail_coeff = 1.0;

    double beta() const { return 1.0 / (alpha2 - alpha1); }

    void validate() const {
        if (!(B > 0) || !(C > 0)) throw std::invalid_argument("PotentialParams: B and C must be positive");
        if (!(epsilon > 0) || !(gamma > 0)) throw std::invalid_argument("PotentialParams: epsilon and gamma must be positive");
        if (!(alpha > 0) || alpha * alpha < (B * B / (C * C) - 2.0 * A / C) * (1.0 - 1e-12))
            throw std::invalid_argument("PotentialParams: alpha below the maximum-principle radius");
        if (!(alpha < alpha1 && alpha1 < alpha2))
            throw std::invalid_argument("PotentialParams: need alpha < alpha1 < alpha2");
        if (!(S1 >= 0) || !(S3 >= 0)) throw std::invalid_argument("PotentialParams: negative stabilization");
    }
};

inline double psi_value(const QTensor& q, const PotentialParams& p) {
    double t2 = tr2(q);
    return 0.5 * p.A * t2 - p.B / 3.0 * tr3(q) + 0.25 * p.C * t2 * t2;
}

inline QTensor psi_grad(const QTensor& q, const PotentialParams& p) {
    QTensor g = (p.A + p.C * tr2(q)) * q - p.B * square(q);
    g.traceless = false;
    return g;
}

namespace detail {
inline double delta(int i, int j) { return i == j ? 1.0 : 0.0; }
}  // namespace detail

inline Tensor4 psi_hessian(const QTensor& q, const PotentialParams& p) {
    using detail::delta;
    Mat3 m = q.matrix();
    double t2 = tr2(q);
    Tensor4 h;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l)
                    h.a[i][j][k][l] = (p.A + p.C * t2) * delta(i, k) * delta(j, l) -
                                      p.B * (m[l][j] * delta(i, k) + m[i][k] * delta(j, l)) +
                                      2.0 * p.C * m[i][j] * m[k][l];
    return h;
}

struct PsiParts {
    double psi1 = 0, psi2 = 0, psi3 = 0;
};
struct PsiPartsGrad {
    QTensor g1, g2, g3;
};

inline PsiParts psi_parts(const QTensor& q, const PotentialParams& p) {
    double t2 = tr2(q), a2 = p.alpha * p.alpha;
    PsiParts r;
    r.psi1 = 0.25 * p.C * (t2 - a2) * (t2 - a2);
    r.psi2 = 0.5 * (p.A + p.C * a2) * t2 - 0.25 * p.C * a2 * a2;
    r.psi3 = -p.B / 3.0 * tr3(q);
    return r;
}

inline PsiPartsGrad psi_parts_grad(const QTensor& q, const PotentialParams& p) {
    double t2 = tr2(q), a2 = p.alpha * p.alpha;
    PsiPartsGrad r;
    r.g1 = p.C * (t2 - a2) * q;
    r.g2 = (p.A + p.C * a2) * q;
    r.g3 = -p.B * square(q);
    r.g1.traceless = r.g2.traceless = r.g3.traceless = false;
    return r;
}

// Hessians of the convex part and the cubic part of the split potential.
inline Tensor4 psi1_hessian(const QTensor& q, const PotentialParams& p) {
    using detail::delta;
    Mat3 m = q.matrix();
    double c0 = p.C * (tr2(q) - p.alpha * p.alpha);
    Tensor4 h;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l)
                    h.a[i][j][k][l] = 2.0 * p.C * m[i][j] * m[k][l] + c0 * delta(i, k) * delta(j, l);
    return h;
}

inline Tensor4 psi3_hessian(const QTensor& q, const PotentialParams& p) {
    using detail::delta;
    Mat3 m = q.matrix();
    Tensor4 h;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l)
                    h.a[i][j][k][l] = -p.B * (m[l][j] * delta(i, k) + m[i][k] * delta(j, l));
    return h;
}

inline double rho(double s, const PotentialParams& p) {
    if (s < 0) throw std::invalid_argument("rho: negative argument");
    if (s <= p.alpha1) return 1.0;
    if (s >= p.alpha2) return 0.0;
    double t = (s - p.alpha1) / (p.alpha2 - p.alpha1);
    return (2.0 * t + 1.0) * (1.0 - t) * (1.0 - t);
}

inline double rho_prime(double s, const PotentialParams& p) {
    if (s < 0) throw std::invalid_argument("rho_prime: negative argument");
    if (s <= p.alpha1 || s >= p.alpha2) return 0.0;
    double t = (s - p.alpha1) / (p.alpha2 - p.alpha1);
    return -6.0 * t * (1.0 - t) / (p.alpha2 - p.alpha1);
}

inline double rho_second(double s, const PotentialParams& p) {
    if (s < 0) throw std::invalid_argument("rho_second: negative argument");
    if (s <= p.alpha1 || s >= p.alpha2) return 0.0;
    double w = p.alpha2 - p.alpha1, t = (s - p.alpha1) / w;
    return (12.0 * t - 6.0) / (w * w);
}

inline double psi1_hat(const QTensor& q, const PotentialParams& p) {
    double s = frobenius(q);
    if (s <= p.alpha) {
        double d = s * s - p.alpha * p.alpha;
        return 0.25 * p.C * d * d;
    }
    return p.C * p.alpha * p.alpha * (s - p.alpha) * (s - p.alpha);
}

inline QTensor psi1_hat_grad(const QTensor& q, const PotentialParams& p) {
    double s = frobenius(q), a2 = p.alpha * p.alpha;
    QTensor g = s <= p.alpha ? p.C * (s * s - a2) * q : 2.0 * p.C * a2 * (s - p.alpha) / s * q;
    g.traceless = false;
    return g;
}

inline Tensor4 psi1_hat_hessian(const QTensor& q, const PotentialParams& p) {
    using detail::delta;
    double s = frobenius(q);
    if (s <= p.alpha) return psi1_hessian(q, p);
    Mat3 m = q.matrix();
    double a2 = p.alpha * p.alpha;
    double cq = 2.0 * p.C * a2 * p.alpha / (s * s * s);
    double cd = 2.0 * p.C * a2 * (1.0 - p.alpha / s);
    Tensor4 h;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l)
                    h.a[i][j][k][l] = cq * m[i][j] * m[k][l] + cd * delta(i, k) * delta(j, l);
    return h;
}

inline double psi3_hat(const QTensor& q, const PotentialParams& p) {
    double t2 = tr2(q), r = rho(std::sqrt(t2), p);
    return -p.B / 3.0 * tr3(q) * r + p.psi3_tail_coeff * t2 * (1.0 - r);
}

inline QTensor psi3_hat_grad(const QTensor& q, const PotentialParams& p) {
    double t2 = tr2(q), s = std::sqrt(t2);
    double r = rho(s, p), rp = rho_prime(s, p);
    double kc = p.psi3_tail_coeff;
    QTensor g = (-p.B * r) * square(q) + (2.0 * kc * (1.0 - r)) * q;
    if (rp != 0.0) g = g + ((-p.B / 3.0 * tr3(q) - kc * t2) * rp / s) * q;
    g.traceless = false;
    return g;
}

inline Tensor4 psi3_hat_hessian(const QTensor& q, const PotentialParams& p) {
    using detail::delta;
    double t2 = tr2(q), s = std::sqrt(t2);
    double r = rho(s, p), kc = p.psi3_tail_coeff;
    Tensor4 h = r * psi3_hessian(q, p) + (2.0 * kc * (1.0 - r)) * Tensor4::identity();
    double rp = rho_prime(s, p);
    if (rp == 0.0) return h;
    // band: add the terms carrying derivatives of rho
    double rpp = rho_second(s, p), f = -p.B / 3.0 * tr3(q);
    Mat3 m = q.matrix(), gf = (-p.B * square(q)).matrix();
    double c = (f - kc * t2) * rp / s;
    double dc = (f - kc * t2) * (rpp / (s * s) - rp / (s * s * s));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l) {
                    double v = (gf[i][j] - 2.0 * kc * m[i][j]) * rp / s * m[k][l] +
                               m[i][j] * ((gf[k][l] - 2.0 * kc * m[k][l]) * rp / s + dc * m[k][l]) +
                               c * delta(i, k) * delta(j, l);
                    h.a[i][j][k][l] += v;
                }
    return h;
}

// Truncated total potential and gradient (the modified energy density).
inline double psi_hat_value(const QTensor& q, const PotentialParams& p) {
    return psi1_hat(q, p) + psi_parts(q, p).psi2 + psi3_hat(q, p);
}

inline QTensor psi_hat_grad(const QTensor& q, const PotentialParams& p) {
    return psi1_hat_grad(q, p) + psi_parts_grad(q, p).g2 + psi3_hat_grad(q, p);
}

inline QTensor trace_penalty(const QTensor& q, const PotentialParams& p) {
    return QTensor::identity(p.B / 3.0 * tr2(q));
}

inline Tensor4 trace_penalty_grad(const QTensor& q, const PotentialParams& p) {
    Mat3 m = q.matrix();
    Tensor4 h;
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l) h.a[i][i][k][l] = 2.0 * p.B / 3.0 * m[k][l];
    return h;
}

// Trace part used by the truncated scheme: cancels the trace of the truncated
// cubic gradient exactly, and equals trace_penalty for |Q| <= alpha1.
inline QTensor trace_penalty_truncated(const QTensor& q, const PotentialParams& p) {
    return QTensor::identity(-psi3_hat_grad(q, p).trace() / 3.0);
}

struct StabilityBounds {
    double S1_default = 0;
    double S3_default = 0;
    double s3F_report = 0;      // closed-form tail bound, Frobenius, as evaluated in the reference results
    double s3F_consistent = 0;  // same formula with beta = 1/(alpha2-alpha1)
};

namespace detail {
// Closed-form entrywise bound of the truncated cubic Hessian.
inline double s3_inf(double B, double C, double a1, double a2, double b) {
    double a22 = a2 * a2, a23 = a22 * a2, a24 = a22 * a22, a25 = a24 * a2, a27 = a25 * a22;
    double b2 = b * b, b3 = b2 * b, C2 = C * C;
    return 24.0 * B * a2 * b * (a25 + a22 * (1.0 + 2.0 * a1) + a1 * a1 + a1) +
           2.0 * B * a2 * (3.0 * b * a22 + 3.0 * b * a1 + 2.0 * a24 * b2 + 4.0 * a1 * a22 * b2 + 2.0 * a1 * a1 * b2 + 1.0) +
           648.0 * B * a27 * b3 + 81.0 * B * a25 + 162.0 * B * a25 * b * a1 + 27.0 * B * a23 * b * a1 * a1 +
           27.0 * B * a23 * b * a1 +
           2.0 * C2 * (3.0 * b * a22 + 3.0 * b * a1 + 2.0 * b2 * a24 + 2.0 * b2 * a1 * a1 + 4.0 * b2 * a22 * a1 + 2.0) +
           C2 * a22 * (4.0 * B * a2 + 24.0 * a24 + 3.0 * a22 + 6.0 * a22 * a1 * b + a1 * a1 * b + b * a1);
}
}  // namespace detail

inline StabilityBounds stability_bounds(const PotentialParams& p) {
    if (!(p.alpha2 > p.alpha1)) throw std::invalid_argument("stability_bounds: alpha2 must exceed alpha1");
    StabilityBounds b;
    double a2 = p.alpha * p.alpha;
    b.S1_default = 12.0 * std::sqrt(3.0) * p.C * a2;
    if (p.A == -0.2 && p.B == 1.0 && p.C == 1.0) {
        b.S3_default = 208.0;
    } else {
        std::mt19937_64 rng(20240917);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double mx = 0;
        for (int n = 0; n < 100000; ++n) {
            QTensor q = make_traceless(u(rng), u(rng), u(rng), u(rng), u(rng));
            double s = frobenius(q);
            if (s == 0) continue;
            double target = p.alpha * std::cbrt(std::abs(u(rng)));
            q = (target / s) * q;
            mx = std::max(mx, frobenius4(psi3_hessian(q, p)));
        }
        b.S3_default = 1.05 * mx;
    }
    b.s3F_report = 9.0 * detail::s3_inf(p.B, p.C, p.alpha1, p.alpha2, 1.0);
    b.s3F_consistent = 9.0 * detail::s3_inf(p.B, p.C, p.alpha1, p.alpha2, p.beta());
    return b;
}

}  // namespace qtensor
