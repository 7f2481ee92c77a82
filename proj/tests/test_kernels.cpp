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
#include <vector>

#include "doctest.h"
#include "rqfedrec/kernels.hpp"
#include "rqfedrec/rng.hpp"

using namespace rqfedrec;

namespace {
std::vector<double> random_vec(std::size_t n, Rng& rng, double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = scale * rng.gaussian();
    return v;
}
}  // namespace

TEST_CASE("scalar kernels compute the obvious identities") {
    const auto& k = kernels::scalar();
    std::vector<double> a{1.0, 2.0, 3.0};
    std::vector<double> b{4.0, -5.0, 6.0};
    CHECK(k.dot(a.data(), b.data(), 3) == doctest::Approx(4.0 - 10.0 + 18.0));
    CHECK(k.l2sq(a.data(), b.data(), 3) == doctest::Approx(9.0 + 49.0 + 9.0));
    CHECK(k.sum_sq(a.data(), 3) == doctest::Approx(14.0));

    std::vector<double> y{1.0, 1.0, 1.0};
    k.axpy(2.0, a.data(), y.data(), 3);
    CHECK(y == std::vector<double>{3.0, 5.0, 7.0});
    k.scale(y.data(), 0.5, 3);
    CHECK(y == std::vector<double>{1.5, 2.5, 3.5});

    std::vector<double> out(3);
    k.blend(out.data(), 0.25, a.data(), 0.75, b.data(), 3);
    CHECK(out[0] == doctest::Approx(0.25 * 1.0 + 0.75 * 4.0));
    CHECK(out[2] == doctest::Approx(0.25 * 3.0 + 0.75 * 6.0));
}

TEST_CASE("every available variant matches scalar on random inputs") {
    auto variants = kernels::available();
    REQUIRE(!variants.empty());
    CHECK(variants.front()->name == std::string("scalar"));

    Rng rng(123);
    const auto& ref = kernels::scalar();
    for (const kernels::Kernels* k : variants) {
        INFO("variant: ", k->name);
        // Odd lengths exercise the vector tails.
        for (std::size_t n : {1, 2, 3, 4, 5, 7, 8, 15, 16, 33, 64, 67, 129}) {
            auto a = random_vec(n, rng);
            auto b = random_vec(n, rng);

            CHECK(k->dot(a.data(), b.data(), n) ==
                  doctest::Approx(ref.dot(a.data(), b.data(), n)).epsilon(1e-11));
            CHECK(k->l2sq(a.data(), b.data(), n) ==
                  doctest::Approx(ref.l2sq(a.data(), b.data(), n)).epsilon(1e-11));
            CHECK(k->sum_sq(a.data(), n) ==
                  doctest::Approx(ref.sum_sq(a.data(), n)).epsilon(1e-11));

            auto y1 = b;
            auto y2 = b;
            k->axpy(0.37, a.data(), y1.data(), n);
            ref.axpy(0.37, a.data(), y2.data(), n);
            for (std::size_t i = 0; i < n; ++i)
                CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-12));

            std::vector<double> o1(n), o2(n);
            k->blend(o1.data(), 0.3, a.data(), 0.7, b.data(), n);
            ref.blend(o2.data(), 0.3, a.data(), 0.7, b.data(), n);
            for (std::size_t i = 0; i < n; ++i)
                CHECK(o1[i] == doctest::Approx(o2[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("adam_step variants agree and move against the gradient") {
    auto variants = kernels::available();
    Rng rng(77);
    const auto& ref = kernels::scalar();
    for (const kernels::Kernels* k : variants) {
        INFO("variant: ", k->name);
        for (std::size_t n : {1, 5, 16, 31, 64}) {
            auto w0 = random_vec(n, rng);
            auto g = random_vec(n, rng);
            auto w1 = w0, w2 = w0;
            std::vector<double> m1(n, 0.0), v1(n, 0.0), m2(n, 0.0), v2(n, 0.0);
            double bias1 = 1.0 - 0.9, bias2 = 1.0 - 0.999;
            k->adam_step(w1.data(), m1.data(), v1.data(), g.data(), n, 0.01, 0.9, 0.999, 1e-8,
                         bias1, bias2);
            ref.adam_step(w2.data(), m2.data(), v2.data(), g.data(), n, 0.01, 0.9, 0.999, 1e-8,
                          bias1, bias2);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(w1[i] == doctest::Approx(w2[i]).epsilon(1e-12));
                // First step moves opposite the gradient sign.
                if (g[i] > 1e-12) CHECK(w1[i] < w0[i]);
                if (g[i] < -1e-12) CHECK(w1[i] > w0[i]);
            }
        }
    }
}

TEST_CASE("forced variant selection is honored") {
    const auto& s = kernels::scalar();
    kernels::force(&s);
    CHECK(kernels::active().name == std::string("scalar"));
    kernels::force(nullptr);
    CHECK(kernels::active().name != nullptr);
}
