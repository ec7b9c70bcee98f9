#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace qtensor {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

// Symmetric 3x3 tensor. q33 is stored explicitly so that identity-proportional
// terms such as the trace penalty fit the same type.
struct QTensor {
    double q11 = 0, q12 = 0, q13 = 0, q22 = 0, q23 = 0, q33 = 0;
    bool traceless = false;

    double operator()(int i, int j) const {
        static constexpr int idx[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
        return data()[idx[i][j]];
    }
    double trace() const { return q11 + q22 + q33; }

    std::array<double, 6> data() const { return {q11, q12, q13, q22, q23, q33}; }

    static QTensor symmetric(double a11, double a12, double a13, double a22, double a23, double a33) {
        return QTensor{a11, a12, a13, a22, a23, a33, false};
    }
    static QTensor from_matrix(const Mat3& m) {
        return symmetric(m[0][0], 0.5 * (m[0][1] + m[1][0]), 0.5 * (m[0][2] + m[2][0]), m[1][1],
                         0.5 * (m[1][2] + m[2][1]), m[2][2]);
    }
    static QTensor identity(double s = 1.0) { return symmetric(s, 0, 0, s, 0, s); }

    Mat3 matrix() const { return {{{q11, q12, q13}, {q12, q22, q23}, {q13, q23, q33}}}; }
};

inline QTensor operator+(const QTensor& a, const QTensor& b) {
    return QTensor{a.q11 + b.q11, a.q12 + b.q12, a.q13 + b.q13, a.q22 + b.q22,
                   a.q23 + b.q23, a.q33 + b.q33, a.traceless && b.traceless};
}
inline QTensor operator-(const QTensor& a, const QTensor& b) {
    return QTensor{a.q11 - b.q11, a.q12 - b.q12, a.q13 - b.q13, a.q22 - b.q22,
                   a.q23 - b.q23, a.q33 - b.q33, a.traceless && b.traceless};
}
inline QTensor operator*(double s, const QTensor& a) {
    return QTensor{s * a.q11, s * a.q12, s * a.q13, s * a.q22, s * a.q23, s * a.q33, a.traceless};
}

inline QTensor make_traceless(double q11, double q12, double q13, double q22, double q23) {
    for (double v : {q11, q12, q13, q22, q23})
        if (!std::isfinite(v)) throw std::invalid_argument("make_traceless: non-finite component");
    return QTensor{q11, q12, q13, q22, q23, -(q11 + q22), true};
}

inline QTensor uniaxial(double s, const Vec3& n) {
    double nn = n[0] * n[0] + n[1] * n[1] + n[2] * n[2];
    if (std::abs(std::sqrt(nn) - 1.0) > 1e-12) throw std::invalid_argument("uniaxial: director is not a unit vector");
    double t = s / 3.0;
    return make_traceless(s * n[0] * n[0] - t, s * n[0] * n[1], s * n[0] * n[2], s * n[1] * n[1] - t, s * n[1] * n[2]);
}

// Matrix product of two symmetric tensors, symmetrised (exact when they commute).
inline Mat3 matmul(const Mat3& a, const Mat3& b) {
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
}

inline QTensor square(const QTensor& q) {
    auto m = q.matrix();
    QTensor r = QTensor::from_matrix(matmul(m, m));
    return r;
}

inline double contract22(const QTensor& p, const QTensor& r) {
    return p.q11 * r.q11 + p.q22 * r.q22 + p.q33 * r.q33 + 2.0 * (p.q12 * r.q12 + p.q13 * r.q13 + p.q23 * r.q23);
}

inline double tr2(const QTensor& q) { return contract22(q, q); }

inline double tr3(const QTensor& q) {
    auto m = q.matrix();
    auto m2 = matmul(m, m);
    double s = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s += m2[i][j] * m[j][i];
    return s;
}

inline double frobenius(const QTensor& q) { return std::sqrt(tr2(q)); }

struct Tensor4 {
    double a[3][3][3][3] = {};

    double& operator()(int i, int j, int k, int l) { return a[i][j][k][l]; }
    double operator()(int i, int j, int k, int l) const { return a[i][j][k][l]; }

    // delta_ik delta_jl
    static Tensor4 identity(double s = 1.0) {
        Tensor4 t;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) t.a[i][j][i][j] = s;
        return t;
    }
};

inline Tensor4 operator+(const Tensor4& x, const Tensor4& y) {
    Tensor4 r;
    const double* px = &x.a[0][0][0][0];
    const double* py = &y.a[0][0][0][0];
    double* pr = &r.a[0][0][0][0];
    for (int n = 0; n < 81; ++n) pr[n] = px[n] + py[n];
    return r;
}

inline Tensor4 operator*(double s, const Tensor4& x) {
    Tensor4 r;
    const double* px = &x.a[0][0][0][0];
    double* pr = &r.a[0][0][0][0];
    for (int n = 0; n < 81; ++n) pr[n] = s * px[n];
    return r;
}

inline double frobenius4(const Tensor4& x) {
    const double* p = &x.a[0][0][0][0];
    double s = 0;
    for (int n = 0; n < 81; ++n) s += p[n] * p[n];
    return std::sqrt(s);
}

// (P:A)_kl = P_ij A_ijkl, and the quadratic form P:A:P.
inline std::pair<QTensor, double> contract_quad(const QTensor& p, const Tensor4& x) {
    Mat3 pm = p.matrix(), r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l) r[k][l] += pm[i][j] * x.a[i][j][k][l];
    double q = 0;
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) q += r[k][l] * pm[k][l];
    return {QTensor::from_matrix(r), q};
}

// (A:D)_ij = A_ijkl D_kl, the directional derivative when A is a gradient.
inline Mat3 apply4(const Tensor4& x, const QTensor& d) {
    Mat3 dm = d.matrix(), r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l) s += x.a[i][j][k][l] * dm[k][l];
            r[i][j] = s;
        }
    return r;
}

// Lower-triangular rearrangement: block (i,j) collects, at its lowest admissible
// (k,l) slot, every entry of A that multiplies the same product Q_ij Q_kl.
// Indices below are zero-based.
inline Tensor4 lower_triangular(const Tensor4& x) {
    auto A = [&](int i, int j, int k, int l) { return x.a[i - 1][j - 1][k - 1][l - 1]; };
    Tensor4 L;
    auto set = [&](int i, int j, int k, int l, double v) { L.a[i - 1][j - 1][k - 1][l - 1] = v; };

    set(1, 1, 1, 1, A(1, 1, 1, 1));

    set(1, 2, 1, 1, A(1, 2, 1, 1) + A(1, 1, 1, 2));
    set(1, 2, 2, 1, A(1, 2, 1, 2) + A(1, 2, 2, 1));
    set(2, 1, 1, 1, A(2, 1, 1, 1) + A(1, 1, 2, 1));
    set(2, 1, 2, 1, A(2, 1, 2, 1) + A(2, 1, 1, 2));

    set(1, 3, 1, 1, A(1, 3, 1, 1) + A(1, 1, 1, 3));
    set(1, 3, 2, 1, A(1, 3, 1, 2) + A(1, 3, 2, 1) + A(1, 2, 1, 3) + A(2, 1, 1, 3));
    set(1, 3, 3, 1, A(1, 3, 1, 3) + A(1, 3, 3, 1));
    set(3, 1, 1, 1, A(3, 1, 1, 1) + A(1, 1, 3, 1));
    set(3, 1, 2, 1, A(3, 1, 1, 2) + A(3, 1, 2, 1) + A(1, 2, 3, 1) + A(2, 1, 3, 1));
    set(3, 1, 3, 1, A(3, 1, 1, 3) + A(3, 1, 3, 1));

    set(2, 2, 1, 1, A(2, 2, 1, 1) + A(1, 1, 2, 2));
    set(2, 2, 2, 1, A(2, 2, 1, 2) + A(2, 2, 2, 1) + A(1, 2, 2, 2) + A(2, 1, 2, 2));
    set(2, 2, 2, 2, A(2, 2, 2, 2));
    set(2, 2, 3, 1, A(2, 2, 1, 3) + A(2, 2, 3, 1) + A(1, 3, 2, 2) + A(3, 1, 2, 2));

    set(2, 3, 1, 1, A(2, 3, 1, 1) + A(1, 1, 2, 3));
    set(2, 3, 2, 1, A(2, 3, 1, 2) + A(2, 3, 2, 1) + A(1, 2, 2, 3) + A(2, 1, 2, 3));
    set(2, 3, 2, 2, A(2, 3, 2, 2) + A(2, 2, 2, 3));
    set(2, 3, 3, 1, A(2, 3, 1, 3) + A(2, 3, 3, 1) + A(1, 3, 2, 3) + A(3, 1, 2, 3));
    set(2, 3, 3, 2, A(2, 3, 2, 3) + A(2, 3, 3, 2));
    set(3, 2, 1, 1, A(3, 2, 1, 1) + A(1, 1, 3, 2));
    set(3, 2, 2, 1, A(3, 2, 1, 2) + A(3, 2, 2, 1) + A(1, 2, 3, 2) + A(2, 1, 3, 2));
    set(3, 2, 2, 2, A(3, 2, 2, 2) + A(2, 2, 3, 2));
    set(3, 2, 3, 1, A(3, 2, 1, 3) + A(3, 2, 3, 1) + A(1, 3, 3, 2) + A(3, 1, 3, 2));
    set(3, 2, 3, 2, A(3, 2, 2, 3) + A(3, 2, 3, 2));

    set(3, 3, 1, 1, A(3, 3, 1, 1) + A(1, 1, 3, 3));
    set(3, 3, 2, 1, A(3, 3, 1, 2) + A(3, 3, 2, 1) + A(1, 2, 3, 3) + A(2, 1, 3, 3));
    set(3, 3, 2, 2, A(3, 3, 2, 2) + A(2, 2, 3, 3));
    set(3, 3, 3, 1, A(3, 3, 1, 3) + A(3, 3, 3, 1) + A(1, 3, 3, 3) + A(3, 1, 3, 3));
    set(3, 3, 3, 2, A(3, 3, 2, 3) + A(3, 3, 3, 2) + A(2, 3, 3, 3) + A(3, 2, 3, 3));
    set(3, 3, 3, 3, A(3, 3, 3, 3));
    return L;
}

struct EigenDecomp {
    Vec3 eigenvalues{};               // descending
    std::array<Vec3, 3> eigenvectors{};  // eigenvectors[i] pairs with eigenvalues[i]
};

// Cyclic Jacobi.
inline EigenDecomp eig_sym3(const QTensor& q) {
    Mat3 a = q.matrix();
    Mat3 v{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    double scale = frobenius(q);
    for (int sweep = 0; sweep < 50; ++sweep) {
        double off = std::sqrt(2.0 * (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2]));
        if (off <= 1e-13 * scale || off == 0.0) break;
        for (int p = 0; p < 2; ++p)
            for (int r = p + 1; r < 3; ++r) {
                double apr = a[p][r];
                if (apr == 0.0) continue;
                double theta = (a[r][r] - a[p][p]) / (2.0 * apr);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int k = 0; k < 3; ++k) {
                    double akp = a[k][p], akr = a[k][r];
                    a[k][p] = c * akp - s * akr;
                    a[k][r] = s * akp + c * akr;
                }
                for (int k = 0; k < 3; ++k) {
                    double apk = a[p][k], ark = a[r][k];
                    a[p][k] = c * apk - s * ark;
                    a[r][k] = s * apk + c * ark;
                }
                for (int k = 0; k < 3; ++k) {
                    double vkp = v[k][p], vkr = v[k][r];
                    v[k][p] = c * vkp - s * vkr;
                    v[k][r] = s * vkp + c * vkr;
                }
            }
    }
    std::array<int, 3> order{0, 1, 2};
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (a[order[j]][order[j]] > a[order[i]][order[i]]) std::swap(order[i], order[j]);
    EigenDecomp d;
    for (int i = 0; i < 3; ++i) {
        d.eigenvalues[i] = a[order[i]][order[i]];
        for (int k = 0; k < 3; ++k) d.eigenvectors[i][k] = v[k][order[i]];
    }
    return d;
}

}  // namespace qtensor
