// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace svitt {

// Dense row-major tensor of doubles. Rank 1..3 is what the model uses;
// matrices are (rows, cols).
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        data.assign(numel_of(shape), 0.0);
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (auto d : s) n *= d;
        return n;
    }

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
    static Tensor full(std::vector<std::size_t> s, double v) {
        Tensor t(std::move(s));
        for (auto& x : t.data) x = v;
        return t;
    }
    static Tensor scalar(double v) {
        Tensor t({1, 1});
        t.data[0] = v;
        return t;
    }
    static Tensor row(const std::vector<double>& v) {
        Tensor t({1, v.size()});
        t.data = v;
        return t;
    }
    static Tensor matrix(std::size_t r, std::size_t c, const std::vector<double>& v) {
        if (v.size() != r * c) throw std::invalid_argument("tensor: bad matrix init size");
        Tensor t({r, c});
        t.data = v;
        return t;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    double& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline std::string shape_str(const Tensor& t) {
    std::string s = "(";
    for (std::size_t i = 0; i < t.shape.size(); ++i)
        s += (i ? "," : "") + std::to_string(t.shape[i]);
    return s + ")";
}

// C = A * B, naive but cache-friendly (ikj).
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner dims " + shape_str(a) + " x " + shape_str(b));
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    Tensor c({n, m});
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = &a.data[i * k];
        double* ci = &c.data[i * m];
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            if (av == 0.0) continue;
            const double* bp = &b.data[p * m];
            for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
        }
    }
    return c;
}

inline Tensor transpose(const Tensor& a) {
    Tensor t({a.cols(), a.rows()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
    return t;
}

}  // namespace svitt
