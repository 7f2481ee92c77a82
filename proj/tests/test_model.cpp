/*
 * Copyright 2026 The RQFedRec Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "rqfedrec/model.hpp"

using namespace rqfedrec;

namespace {

MfModel tiny_model(std::size_t users, std::size_t items, std::size_t d, std::uint64_t seed,
                   double init_std = 0.5) {
    std::vector<std::uint32_t> ids(users);
    std::iota(ids.begin(), ids.end(), 0u);
    return MfModel(ids, items, d, seed, init_std);
}

}  // namespace

TEST_CASE("predict is sigmoid of the dot product") {
    MfModel m = tiny_model(2, 3, 3, 1);
    // zero user vector -> 0.5 for any item
    auto u0 = m.user_table().row(0);
    std::fill(u0.begin(), u0.end(), 0.0);
    for (std::uint32_t i = 0; i < 3; ++i) CHECK(m.predict(0, i) == doctest::Approx(0.5));

    // user = item = (1,0,0) -> sigmoid(1)
    auto u1 = m.user_table().row(1);
    u1[0] = 1.0; u1[1] = 0.0; u1[2] = 0.0;
    Matrix items = m.item_table();
    items.at(2, 0) = 1.0; items.at(2, 1) = 0.0; items.at(2, 2) = 0.0;
    m.set_item_table(items);
    CHECK(m.predict(1, 2) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));

    // random 3-dim pair vs hand-computed dot+sigmoid
    Rng rng(5);
    for (std::size_t k = 0; k < 3; ++k) u1[k] = rng.gaussian();
    for (std::size_t k = 0; k < 3; ++k) items.at(0, k) = rng.gaussian();
    m.set_item_table(items);
    double z = 0.0;
    for (std::size_t k = 0; k < 3; ++k) z += u1[k] * items.at(0, k);
    CHECK(m.predict(1, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-z))));
}

TEST_CASE("predict depends only on the dot product (coordinate permutation)") {
    MfModel a = tiny_model(1, 1, 4, 9);
    MfModel b = tiny_model(1, 1, 4, 9);
    // permute coordinates of both vectors identically in b
    std::vector<std::size_t> perm{2, 0, 3, 1};
    Matrix items_b = b.get_item_table();
    for (std::size_t k = 0; k < 4; ++k) {
        b.user_table().row(0)[k] = a.user_table().row(0)[perm[k]];
        items_b.at(0, k) = a.item_table().at(0, perm[k]);
    }
    b.set_item_table(items_b);
    CHECK(a.predict(0, 0) == doctest::Approx(b.predict(0, 0)));
}

TEST_CASE("mean BCE at p=0.5 is ln 2") {
    MfModel m = tiny_model(1, 4, 3, 2);
    auto u = m.user_table().row(0);
    std::fill(u.begin(), u.end(), 0.0);  // all predictions 0.5
    std::vector<Interaction> batch{{0, 0, 1.0f}, {0, 1, 0.0f}, {0, 2, 1.0f}, {0, 3, 0.0f}};
    double loss = bce_loss_and_grads(m, batch, nullptr, nullptr);
    CHECK(loss == doctest::Approx(std::log(2.0)));
}

TEST_CASE("BCE gradients match central finite differences") {
    MfModel m = tiny_model(2, 5, 4, 31);
    std::vector<Interaction> batch{{0, 0, 1.0f}, {0, 3, 0.0f}, {1, 2, 1.0f},
                                   {1, 0, 0.0f}, {0, 2, 1.0f}};
    Matrix user_grads(2, 4), item_grads(5, 4);
    bce_loss_and_grads(m, batch, &user_grads, &item_grads);

    const double h = 1e-6;
    double max_rel = 0.0;
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            double numeric = oracle::central_difference(
                [&] { return bce_loss_and_grads(m, batch, nullptr, nullptr); },
                m.user_table().row(r)[c], h);
            double analytic = user_grads.at(r, c);
            double denom = std::max({std::fabs(numeric), std::fabs(analytic), 1e-8});
            max_rel = std::max(max_rel, std::fabs(numeric - analytic) / denom);
        }
    }
    for (std::size_t r = 0; r < 5; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            double numeric = oracle::central_difference(
                [&] { return bce_loss_and_grads(m, batch, nullptr, nullptr); },
                m.mutable_item_table().row(r)[c], h);
            double analytic = item_grads.at(r, c);
            double denom = std::max({std::fabs(numeric), std::fabs(analytic), 1e-8});
            max_rel = std::max(max_rel, std::fabs(numeric - analytic) / denom);
        }
    }
    CHECK(max_rel < 1e-4);
}

TEST_CASE("training drives the loss down on a separable toy dataset") {
    MfModel m = tiny_model(5, 5, 8, 77, 0.01);
    AdamConfig cfg;
    cfg.lr = 0.05;
    cfg.weight_decay = 0.0;
    OptimizerState opt(m, cfg);

    // user u likes item u and dislikes the others: perfectly separable
    std::vector<Interaction> data;
    for (std::uint32_t u = 0; u < 5; ++u)
        for (std::uint32_t i = 0; i < 5; ++i)
            data.push_back({u, i, u == i ? 1.0f : 0.0f});

    Rng rng(4);
    std::vector<double> losses;
    for (int epoch = 0; epoch < 50; ++epoch)
        losses.push_back(train_epoch(m, opt, data, 8, rng));
    CHECK(losses.back() < 0.1);
    // loss decreasing over the first epochs, allowing small Adam transients
    for (std::size_t e = 1; e < 5; ++e) CHECK(losses[e] <= losses[e - 1] + 1e-3);
}

TEST_CASE("train_epoch is deterministic under a fixed seed") {
    auto run = [] {
        MfModel m = tiny_model(3, 6, 4, 13, 0.01);
        OptimizerState opt(m, {});
        std::vector<Interaction> data{{0, 1, 1.0f}, {1, 2, 0.0f}, {2, 3, 1.0f}, {0, 4, 0.0f}};
        Rng rng(99);
        train_epoch(m, opt, data, 2, rng);
        return m.get_item_table();
    };
    CHECK(run() == run());
}

TEST_CASE("set_item_table round trips and leaves users untouched") {
    MfModel m = tiny_model(2, 4, 3, 21);
    Matrix users_before = m.user_table();
    Matrix replacement(4, 3, 0.25);
    m.set_item_table(replacement);
    CHECK(m.get_item_table() == replacement);
    CHECK(m.user_table() == users_before);

    Matrix wrong(3, 3, 0.0);
    CHECK_THROWS_AS(m.set_item_table(wrong), std::invalid_argument);

    // prediction uses the new vectors
    double before = m.predict(0, 1);
    Matrix other(4, 3, -0.9);
    m.set_item_table(other);
    double after = m.predict(0, 1);
    CHECK(before != after);
}

TEST_CASE("empty example stream is a no-op") {
    MfModel m = tiny_model(1, 2, 3, 5);
    OptimizerState opt(m, {});
    Rng rng(1);
    CHECK(train_epoch(m, opt, {}, 4, rng) == 0.0);
}
