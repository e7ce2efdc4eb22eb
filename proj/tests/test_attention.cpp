// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "oracle.hpp"
#include "svitt/attention.hpp"
#include "svitt/rng.hpp"

using namespace svitt;
using namespace svitt::attention;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    Tensor t({r, c});
    for (auto& v : t.data) v = rng.gaussian();
    return t;
}

AttentionInputs random_inputs(std::size_t n, std::size_t d, std::size_t heads, Rng& rng) {
    AttentionInputs in;
    in.q = random_matrix(n, d, rng);
    in.k = random_matrix(n, d, rng);
    in.v = random_matrix(n, d, rng);
    in.n_heads = heads;
    in.scale = 1.0 / std::sqrt(static_cast<double>(d / heads));
    return in;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("dense attention matches the reference implementation") {
    Rng rng(1);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 2 + rng.below(40);
        auto in = random_inputs(n, 16, 4, rng);
        auto got = dense_attention(in);
        auto want = oracle::dense_attention(in.q, in.k, in.v, 4, in.scale);
        CHECK(max_abs_diff(got, want) < 1e-12);
    }
}

TEST_CASE("sparse attention over a complete graph equals dense") {
    Rng rng(2);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n_reg = 4 + rng.below(60);
        auto in = random_inputs(n_reg + 1, 32, 4, rng);
        // one huge local window covers every block
        auto edges = topology::make_edge_set(n_reg, 4, 2 * ((n_reg + 3) / 4) + 1, 0, 0);
        auto got = sparse_attention(in, edges);
        auto want = dense_attention(in);
        CHECK(max_abs_diff(got, want) < 1e-6);
    }
}

TEST_CASE("masked attention gives zero weight outside the allowed keys") {
    Rng rng(3);
    auto in = random_inputs(4, 8, 2, rng);
    // query 0 may only see keys {1,3}: output must equal dense over those rows
    std::vector<std::vector<std::size_t>> allowed = {{1, 3}, {0, 1, 2, 3}, {2}, {0, 3}};
    auto got = masked_attention(in, allowed);

    AttentionInputs sub = in;
    sub.k = Tensor({2, 8});
    sub.v = Tensor({2, 8});
    for (std::size_t j = 0; j < 8; ++j) {
        sub.k.at(0, j) = in.k.at(1, j);
        sub.k.at(1, j) = in.k.at(3, j);
        sub.v.at(0, j) = in.v.at(1, j);
        sub.v.at(1, j) = in.v.at(3, j);
    }
    auto want = dense_attention(sub);
    for (std::size_t j = 0; j < 8; ++j)
        CHECK(got.at(0, j) == doctest::Approx(want.at(0, j)).epsilon(1e-12));
}

TEST_CASE("a query with no permitted keys is an error") {
    Rng rng(4);
    auto in = random_inputs(3, 8, 2, rng);
    std::vector<std::vector<std::size_t>> allowed = {{0}, {}, {1}};
    CHECK_THROWS_AS(masked_attention(in, allowed), std::runtime_error);
}

TEST_CASE("relative position bias indexes by grid offset") {
    RelPosBias bias;
    bias.t_dim = 2;
    bias.h_dim = 3;
    bias.w_dim = 3;
    bias.tables.assign(1, Tensor({bias.table_size()}));
    for (std::size_t i = 0; i < bias.tables[0].numel(); ++i) bias.tables[0][i] = i;

    GridCoord cls;  // t = -1
    GridCoord a{0, 1, 1}, b{1, 2, 0};
    CHECK(bias.index(cls, a) == -1);
    CHECK(bias.index(a, cls) == -1);
    // zero offset lands in the table center
    const long long center = bias.index(a, a);
    CHECK(center == static_cast<long long>(bias.table_size() / 2));
    // shifting the key by (+1,+1,-1) moves the flat index accordingly
    CHECK(bias.index(a, b) == center + 5 * 5 + 5 - 1);
    CHECK(bias.lookup(0, a, b) == doctest::Approx(bias.index(a, b)));
    // offsets are anti-symmetric around the center
    CHECK(bias.index(a, b) + bias.index(b, a) == 2 * center);
}

TEST_CASE("bias shifts attention output") {
    Rng rng(5);
    AttentionInputs in = random_inputs(5, 8, 2, rng);
    in.q_coords.assign(5, GridCoord{});
    in.k_coords.assign(5, GridCoord{});
    for (int i = 1; i < 5; ++i) {
        in.q_coords[i] = {0, (i - 1) / 2, (i - 1) % 2};
        in.k_coords[i] = in.q_coords[i];
    }
    RelPosBias bias;
    bias.t_dim = 1;
    bias.h_dim = 2;
    bias.w_dim = 2;
    bias.tables.assign(2, Tensor({bias.table_size()}));
    auto base = dense_attention(in, &bias);  // all-zero tables: no effect
    CHECK(max_abs_diff(base, dense_attention(in)) < 1e-15);
    bias.tables[0][0] = 3.0;
    bias.tables[1][4] = -2.0;
    CHECK(max_abs_diff(base, dense_attention(in, &bias)) > 1e-4);
}

TEST_CASE("cls attention scores exclude the cls key and sum to one") {
    Rng rng(6);
    auto in = random_inputs(9, 16, 4, rng);
    auto scores = extract_cls_attention(in);
    REQUIRE(scores.size() == 8);
    double sum = 0;
    for (auto s : scores) {
        CHECK(s > 0);
        sum += s;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("softmax scores for an arbitrary query row") {
    Rng rng(7);
    Tensor q({1, 8});
    for (auto& v : q.data) v = rng.gaussian();
    auto keys = random_matrix(6, 8, rng);
    auto s = softmax_scores(q, keys, 2, 0.5);
    REQUIRE(s.size() == 6);
    double sum = 0;
    for (auto v : s) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("attention input validation") {
    Rng rng(8);
    auto in = random_inputs(4, 8, 2, rng);
    in.v = random_matrix(3, 8, rng);
    CHECK_THROWS_AS(dense_attention(in), std::invalid_argument);
    in = random_inputs(4, 8, 3, rng);  // heads must divide dim
    CHECK_THROWS_AS(dense_attention(in), std::invalid_argument);
}
