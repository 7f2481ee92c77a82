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
#include "doctest.h"
#include "rqfedrec/config.hpp"

using namespace rqfedrec;

TEST_CASE("defaults validate") {
    ExperimentConfig cfg;
    CHECK(validate_config(cfg).empty());
}

TEST_CASE("parse(render(config)) == config") {
    ExperimentConfig cfg;
    cfg.dataset = "/data/u.data";
    cfg.semantic = "synthetic";
    cfg.method = "fedmf";
    cfg.seed = 1234567890123ULL;
    cfg.d = 64;
    cfg.M = 256;
    cfg.lr_model = 0.00123;
    cfg.weight_decay = 1e-6;
    cfg.dp_delta = 0.04;
    cfg.noise_ratio = 0.15;
    cfg.synth_temperature = 0.41;
    ExperimentConfig back = parse_config_text(render_config(cfg));
    CHECK(back == cfg);
}

TEST_CASE("overrides, comments and errors") {
    ExperimentConfig cfg = parse_config_text(
        "# a comment\n"
        "d = 32   # trailing comment\n"
        "\n"
        "method = local\n");
    CHECK(cfg.d == 32);
    CHECK(cfg.method == "local");

    apply_config_override(cfg, "rounds", "17");
    CHECK(cfg.rounds == 17);

    CHECK_THROWS_WITH_AS(apply_config_override(cfg, "no_such_key", "1"),
                         doctest::Contains("no_such_key"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(apply_config_override(cfg, "d", "not_a_number"),
                         doctest::Contains("d"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("novalue\n"), std::invalid_argument);
}

TEST_CASE("validation names the failing field") {
    ExperimentConfig cfg;
    cfg.M = 0;
    cfg.method = "bogus";
    cfg.noise_ratio = 2.0;
    auto errors = validate_config(cfg);
    REQUIRE(errors.size() == 3);
    bool saw_m = false, saw_method = false, saw_noise = false;
    for (const auto& e : errors) {
        saw_m |= e.find("M:") == 0;
        saw_method |= e.find("method") != std::string::npos;
        saw_noise |= e.find("noise_ratio") == 0;
    }
    CHECK(saw_m);
    CHECK(saw_method);
    CHECK(saw_noise);
}
