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
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rqfedrec {

enum class Method { rqfedrec, fedmf, local };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

// Everything a run needs. Plain key=value text on disk; every run writes its
// resolved config (defaults included) next to its outputs.
struct ExperimentConfig {
    std::string dataset = "synthetic";   // TSV path or "synthetic"
    std::string semantic = "synthetic";  // vector file path or "synthetic"
    std::string method = "rqfedrec";
    std::string output_dir = "out";
    std::uint64_t seed = 42;

    std::size_t n_clients = 100;
    std::size_t d = 512;
    std::size_t M = 256;
    std::size_t L = 3;
    std::size_t tau = 10;
    std::size_t T_warm = 100;
    std::size_t rounds = 200;
    std::size_t local_epochs = 1;
    std::size_t negative_ratio = 4;
    std::size_t batch_size = 512;
    std::size_t codebook_steps = 100;
    std::size_t eval_every = 10;
    std::size_t kmeans_iters = 50;

    double lr_model = 0.01;
    double lr_codebook = 0.01;
    double weight_decay = 1e-6;
    double dp_delta = 0.0;
    double noise_ratio = 0.0;
    double init_std = 0.01;

    // Synthetic-dataset knobs (used when dataset == "synthetic").
    std::size_t synth_users = 500;
    std::size_t synth_items = 800;
    std::size_t synth_avg_per_user = 40;
    std::size_t synth_topics = 24;
    std::size_t synth_latent_dim = 16;
    std::size_t d_sem = 32;
    double synth_temperature = 0.35;
    double synth_semantic_noise = 0.25;

    bool operator==(const ExperimentConfig&) const = default;
};

// `key = value` lines, '#' comments. Unknown keys and unparsable values are
// errors naming the key.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);
void apply_config_override(ExperimentConfig& cfg, const std::string& key,
                           const std::string& value);
std::string render_config(const ExperimentConfig& cfg);

// Field-level validation messages; empty means usable.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

}  // namespace rqfedrec
