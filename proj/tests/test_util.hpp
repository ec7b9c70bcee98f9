#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <utility>

#include "qtensor/tensor_core.hpp"

namespace testutil {

inline qtensor::QTensor random_symmetric(std::mt19937_64& rng, double lo = -2.0, double hi = 2.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    return qtensor::QTensor::symmetric(u(rng), u(rng), u(rng), u(rng), u(rng), u(rng));
}

inline qtensor::QTensor random_traceless(std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    return qtensor::make_traceless(u(rng), u(rng), u(rng), u(rng), u(rng));
}

inline qtensor::Tensor4 random_tensor4(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    qtensor::Tensor4 t;
    for (auto& a : t.a)
        for (auto& b : a)
            for (auto& c : b)
                for (auto& d : c) d = u(rng);
    return t;
}

}  // namespace testutil

namespace testutil {

inline double fd_value(const std::function<double(const qtensor::QTensor&)>& f, const qtensor::QTensor& q,
                       const qtensor::QTensor& e, double h) {
    return (f(q + h * e) - f(q - h * e)) / (2 * h);
}

inline qtensor::Mat3 fd_grad(const std::function<qtensor::QTensor(const qtensor::QTensor&)>& g, const qtensor::QTensor& q,
                             const qtensor::QTensor& e, double h) {
    qtensor::Mat3 a = g(q + h * e).matrix(), b = g(q - h * e).matrix(), r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r[i][j] = (a[i][j] - b[i][j]) / (2 * h);
    return r;
}

inline double mat_dist(const qtensor::Mat3& a, const qtensor::Mat3& b) {
    double s = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s += (a[i][j] - b[i][j]) * (a[i][j] - b[i][j]);
    return std::sqrt(s);
}

inline double mat_norm(const qtensor::Mat3& a) { return mat_dist(a, qtensor::Mat3{}); }

}  // namespace testutil
