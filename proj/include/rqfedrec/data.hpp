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
#include <utility>
#include <vector>

#include "rqfedrec/matrix.hpp"
#include "rqfedrec/rng.hpp"

namespace rqfedrec {

struct Interaction {
    std::uint32_t user = 0;
    std::uint32_t item = 0;
    float label = 1.0f;  // binary {0,1}

    bool operator==(const Interaction&) const = default;
};

enum class DatasetFormat { tsv_triples };

// User/item interactions with dense ids, train/val/test splits and the
// client partition. Everything is read-only once the simulator starts, so
// clients may share one instance.
struct InteractionDataset {
    std::size_t n_users = 0;
    std::size_t n_items = 0;

    // Before split_dataset all interactions sit in `train`.
    std::vector<Interaction> train;
    std::vector<Interaction> val;
    std::vector<Interaction> test;
    bool split_done = false;

    // client id -> user ids. Empty until partition_clients.
    std::vector<std::vector<std::uint32_t>> partition;

    // user -> sorted item ids of its train positives. Maintained by
    // split_dataset and inject_click_noise.
    std::vector<std::vector<std::uint32_t>> train_items_by_user;

    // Original file tokens by dense id (loader only; synthetic data leaves
    // these empty).
    std::vector<std::string> user_tokens;
    std::vector<std::string> item_tokens;

    std::size_t total_interactions() const { return train.size() + val.size() + test.size(); }
    bool user_has_train_item(std::uint32_t user, std::uint32_t item) const;
};

struct SemanticVectors {
    Matrix values;  // n_items x d_sem
};

// Reads `user item value [extra...]` lines (whitespace separated; extra
// columns such as timestamps are ignored). Tokens are densely re-indexed in
// first-appearance order and every observed interaction becomes label 1.
InteractionDataset load_dataset(const std::string& path, DatasetFormat format);

// Per-user 8:2 split: floor(0.8*count) interactions to the train pool, the
// rest to test, then ~10% of the train pool moved to val. Deterministic.
void split_dataset(InteractionDataset& ds, std::uint64_t seed);

// Shuffles users and deals them round-robin into n_clients groups.
void partition_clients(InteractionDataset& ds, std::size_t n_clients, std::uint64_t seed);

// File format: header line `n_items d_sem`, then one whitespace-separated
// row per dense item id. expected_items == 0 disables the row-count check.
SemanticVectors load_semantic_vectors(const std::string& path, std::size_t expected_items);

void save_semantic_vectors(const std::string& path, const SemanticVectors& sv);

// Gaussian fallback generator for tests and synthetic runs.
SemanticVectors synthesize_semantic_vectors(std::size_t n_items, std::size_t d_sem,
                                            std::uint64_t seed);

// For every train positive of the client's users, draws `ratio` items the
// user has no train interaction with, labeled 0.
std::vector<Interaction> sample_negatives(const InteractionDataset& ds, std::size_t client_id,
                                          std::size_t ratio, Rng& rng);

// Returns a copy with ceil(noise_ratio * |train|) random fake positives
// appended to train (misclick simulation). Val/test are untouched.
InteractionDataset inject_click_noise(const InteractionDataset& ds, double noise_ratio,
                                      std::uint64_t seed);

// Synthetic implicit-feedback world with planted topic structure. Users and
// items get latent vectors grouped by topics; interactions are drawn without
// replacement proportional to softmax affinity (Gumbel top-k); semantic
// vectors are a random linear image of the item latents plus noise, so the
// semantic channel carries real signal about collaborative structure.
struct SynthSpec {
    std::size_t n_users = 500;
    std::size_t n_items = 800;
    std::size_t avg_items_per_user = 40;
    std::size_t n_topics = 24;
    std::size_t latent_dim = 16;
    std::size_t d_sem = 32;
    double temperature = 0.35;     // softmax temperature for item choice
    double semantic_noise = 0.25;  // noise stddev on semantic vectors
};

std::pair<InteractionDataset, SemanticVectors> make_synthetic_dataset(const SynthSpec& spec,
                                                                      std::uint64_t seed);

}  // namespace rqfedrec
