#include "catch_amalgamated.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "qtensor/tensor_core.hpp"
#include "test_util.hpp"

using namespace qtensor;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

void require_equal(const QTensor& a, const QTensor& b, double tol = 1e-14) {
    auto x = a.data(), y = b.data();
    for (int i = 0; i < 6; ++i) REQUIRE_THAT(x[i], WithinAbs(y[i], tol));
}

// Position of the symmetric pair (k,l) in the order 11,12,13,22,23,33.
int pair_index(int k, int l) {
    static constexpr int idx[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
    return idx[k][l];
}

}  // namespace

TEST_CASE("make_traceless fills q33 from the trace") {
    require_equal(make_traceless(0, 0, 0, 0, 0), QTensor{});
    require_equal(make_traceless(1, 0, 0, 0, 0), QTensor::symmetric(1, 0, 0, 0, 0, -1));
    require_equal(make_traceless(1.0 / 3, 0, 0, 1.0 / 3, 0), QTensor::symmetric(1.0 / 3, 0, 0, 1.0 / 3, 0, -2.0 / 3));
    CHECK(make_traceless(1, 2, 3, 4, 5).traceless);
    CHECK_THROWS_AS(make_traceless(NAN, 0, 0, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(make_traceless(0, INFINITY, 0, 0, 0), std::invalid_argument);
}

TEST_CASE("uniaxial tensors") {
    require_equal(uniaxial(1, {0, 0, 1}), QTensor::symmetric(-1.0 / 3, 0, 0, -1.0 / 3, 0, 2.0 / 3));
    require_equal(uniaxial(0, {0.6, 0.8, 0}), QTensor{});
    const double r = 1 / std::sqrt(2.0);
    require_equal(uniaxial(1, {r, r, 0}), QTensor::symmetric(1.0 / 6, 0.5, 0, 1.0 / 6, 0, -1.0 / 3));
    CHECK_THROWS_AS(uniaxial(1, {1, 1, 0}), std::invalid_argument);
}

TEST_CASE("traces and contractions") {
    QTensor u = uniaxial(1, {0, 0, 1});
    QTensor d = QTensor::symmetric(1, 0, 0, 0, 0, -1);
    CHECK(tr2(QTensor{}) == 0);
    CHECK(tr3(QTensor{}) == 0);
    CHECK_THAT(tr2(u), WithinAbs(2.0 / 3, 1e-15));
    CHECK_THAT(tr3(u), WithinAbs(2.0 / 9, 1e-15));
    CHECK_THAT(tr2(d), WithinAbs(2.0, 1e-15));
    CHECK_THAT(tr3(d), WithinAbs(0.0, 1e-15));
    CHECK_THAT(contract22(u, u), WithinAbs(2.0 / 3, 1e-15));
    CHECK(contract22(QTensor{}, u) == 0);
    CHECK(contract22(d, QTensor::identity()) == 0);

    std::mt19937_64 rng(7);
    for (int n = 0; n < 100; ++n) {
        QTensor q = testutil::random_symmetric(rng);
        Mat3 m = q.matrix();
        double t3 = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) t3 += m[i][j] * m[j][k] * m[k][i];
        CHECK_THAT(tr3(q), WithinAbs(t3, 1e-12));
        require_equal(square(q), QTensor::from_matrix(matmul(m, m)), 1e-13);
    }
}

TEST_CASE("contract_quad and frobenius4") {
    std::mt19937_64 rng(11);
    QTensor p = testutil::random_symmetric(rng);
    auto [pa, form] = contract_quad(p, Tensor4::identity());
    require_equal(pa, p);
    CHECK_THAT(form, WithinRel(tr2(p), 1e-14));
    auto [z, zf] = contract_quad(QTensor{}, testutil::random_tensor4(rng));
    require_equal(z, QTensor{});
    CHECK(zf == 0);

    CHECK(frobenius4(Tensor4{}) == 0);
    CHECK_THAT(frobenius4(Tensor4::identity()), WithinAbs(3.0, 1e-15));
    Tensor4 single;
    single(0, 1, 2, 0) = 2;
    CHECK(frobenius4(single) == 2);
}

TEST_CASE("lower_triangular preserves the quadratic form on symmetric tensors") {
    std::mt19937_64 rng(20240917);
    for (int n = 0; n < 1000; ++n) {
        Tensor4 a = testutil::random_tensor4(rng);
        QTensor q = testutil::random_symmetric(rng);
        Tensor4 l = lower_triangular(a);
        double fa = 0, fl = 0, scale = 0;
        Mat3 m = q.matrix();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k)
                    for (int o = 0; o < 3; ++o) {
                        fa += m[i][j] * a(i, j, k, o) * m[k][o];
                        fl += m[i][j] * l(i, j, k, o) * m[k][o];
                        scale += std::abs(m[i][j] * a(i, j, k, o) * m[k][o]);
                    }
        REQUIRE(std::abs(fa - fl) <= 1e-12 * scale);
    }
}

TEST_CASE("lower_triangular only couples each block to earlier components") {
    std::mt19937_64 rng(3);
    Tensor4 l = lower_triangular(testutil::random_tensor4(rng));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int o = 0; o < 3; ++o)
                    if (l(i, j, k, o) != 0) CHECK(pair_index(k, o) <= pair_index(i, j));
    CHECK(frobenius4(lower_triangular(Tensor4{})) == 0);
}

TEST_CASE("eig_sym3 examples") {
    auto d = eig_sym3(uniaxial(1, {0, 0, 1}));
    CHECK_THAT(d.eigenvalues[0], WithinAbs(2.0 / 3, 1e-14));
    CHECK_THAT(d.eigenvalues[1], WithinAbs(-1.0 / 3, 1e-14));
    CHECK_THAT(d.eigenvalues[2], WithinAbs(-1.0 / 3, 1e-14));
    CHECK_THAT(std::abs(d.eigenvectors[0][2]), WithinAbs(1.0, 1e-14));

    auto z = eig_sym3(QTensor{});
    for (double v : z.eigenvalues) CHECK(v == 0);

    const double r = 1 / std::sqrt(2.0);
    auto e = eig_sym3(QTensor::symmetric(1.0 / 6, 0.5, 0, 1.0 / 6, 0, -1.0 / 3));
    CHECK_THAT(e.eigenvalues[0], WithinAbs(2.0 / 3, 1e-14));
    CHECK_THAT(std::abs(e.eigenvectors[0][0]), WithinAbs(r, 1e-13));
    CHECK_THAT(std::abs(e.eigenvectors[0][1]), WithinAbs(r, 1e-13));
    CHECK_THAT(e.eigenvectors[0][2], WithinAbs(0.0, 1e-13));
}

TEST_CASE("eig_sym3 agrees with a dense symmetric eigensolver") {
    std::mt19937_64 rng(99);
    for (int n = 0; n < 500; ++n) {
        QTensor q = n % 2 ? testutil::random_symmetric(rng) : testutil::random_traceless(rng, 1.5);
        Eigen::Matrix3d m;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m(i, j) = q(i, j);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> ref(m);
        auto d = eig_sym3(q);
        double scale = std::max(1.0, m.norm());
        for (int i = 0; i < 3; ++i) REQUIRE_THAT(d.eigenvalues[i], WithinAbs(ref.eigenvalues()[2 - i], 1e-12 * scale));
        for (int i = 0; i < 3; ++i) {
            Eigen::Vector3d v(d.eigenvectors[i][0], d.eigenvectors[i][1], d.eigenvectors[i][2]);
            REQUIRE_THAT(v.norm(), WithinAbs(1.0, 1e-12));
            REQUIRE((m * v - d.eigenvalues[i] * v).norm() <= 1e-11 * scale);
        }
    }
}

TEST_CASE("eig_sym3 handles repeated eigenvalues") {
    auto d = eig_sym3(QTensor::identity(2.0));
    for (double v : d.eigenvalues) CHECK_THAT(v, WithinAbs(2.0, 1e-15));
    const double s = 1 / std::sqrt(3.0);
    auto u = eig_sym3(uniaxial(0.7, {s, s, s}));
    CHECK_THAT(u.eigenvalues[0], WithinAbs(0.7 * 2.0 / 3, 1e-13));
    CHECK_THAT(u.eigenvalues[1], WithinAbs(-0.7 / 3, 1e-13));
    CHECK_THAT(u.eigenvalues[2], WithinAbs(-0.7 / 3, 1e-13));
}
