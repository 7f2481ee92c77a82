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
#include "rqfedrec/data.hpp"

#include "rqfedrec/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace rqfedrec {

bool InteractionDataset::user_has_train_item(std::uint32_t user, std::uint32_t item) const {
    const auto& items = train_items_by_user[user];
    return std::binary_search(items.begin(), items.end(), item);
}

InteractionDataset load_dataset(const std::string& path, DatasetFormat format) {
    if (format != DatasetFormat::tsv_triples)
        throw std::invalid_argument("load_dataset: unsupported format");

    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dataset: cannot open " + path);

    InteractionDataset ds;
    std::unordered_map<std::string, std::uint32_t> user_ids;
    std::unordered_map<std::string, std::uint32_t> item_ids;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;

        std::istringstream fields(line);
        std::string user_tok, item_tok, value_tok;
        if (!(fields >> user_tok >> item_tok >> value_tok)) {
            throw std::runtime_error("load_dataset: malformed line " + std::to_string(line_no) +
                                     " in " + path);
        }
        try {
            std::size_t consumed = 0;
            (void)std::stod(value_tok, &consumed);
            if (consumed != value_tok.size()) throw std::invalid_argument("trailing junk");
        } catch (const std::exception&) {
            throw std::runtime_error("load_dataset: malformed line " + std::to_string(line_no) +
                                     " in " + path + " (bad value '" + value_tok + "')");
        }

        auto intern = [](std::unordered_map<std::string, std::uint32_t>& map,
                         std::vector<std::string>& tokens, const std::string& tok) {
            auto [it, inserted] = map.emplace(tok, static_cast<std::uint32_t>(tokens.size()));
            if (inserted) tokens.push_back(tok);
            return it->second;
        };
        Interaction inter;
        inter.user = intern(user_ids, ds.user_tokens, user_tok);
        inter.item = intern(item_ids, ds.item_tokens, item_tok);
        inter.label = 1.0f;  // implicit feedback: any observed interaction is positive
        ds.train.push_back(inter);
    }
    if (ds.train.empty()) throw std::runtime_error("load_dataset: empty file " + path);

    ds.n_users = ds.user_tokens.size();
    ds.n_items = ds.item_tokens.size();
    return ds;
}

void split_dataset(InteractionDataset& ds, std::uint64_t seed) {
    if (ds.split_done) throw std::logic_error("split_dataset: already split");

    std::vector<std::vector<Interaction>> by_user(ds.n_users);
    for (const Interaction& it : ds.train) by_user[it.user].push_back(it);

    ds.train.clear();
    ds.val.clear();
    ds.test.clear();
    ds.train_items_by_user.assign(ds.n_users, {});

    Rng rng(derive_seed(seed, seed_tag::kSplit));
    std::size_t users_without_train = 0;
    for (std::uint32_t u = 0; u < ds.n_users; ++u) {
        auto& items = by_user[u];
        if (items.empty()) {
            ++users_without_train;
            continue;
        }
        rng.shuffle(items);

        std::size_t count = items.size();
        auto train_pool = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(count)));
        std::size_t n_val = 0;
        if (train_pool > 0) {
            n_val = static_cast<std::size_t>(
                std::llround(0.1 * static_cast<double>(train_pool)));
            n_val = std::min(n_val, train_pool - 1);  // every user keeps >=1 train item
        }
        std::size_t n_train = train_pool - n_val;

        for (std::size_t i = 0; i < count; ++i) {
            if (i < n_train) {
                ds.train.push_back(items[i]);
                ds.train_items_by_user[u].push_back(items[i].item);
            } else if (i < train_pool) {
                ds.val.push_back(items[i]);
            } else {
                ds.test.push_back(items[i]);
            }
        }
        std::sort(ds.train_items_by_user[u].begin(), ds.train_items_by_user[u].end());
        if (train_pool == 0) ++users_without_train;
    }
    if (users_without_train > 0) {
        std::fprintf(stderr, "split_dataset: %zu user(s) ended up with no train interactions\n",
                     users_without_train);
    }
    ds.split_done = true;
}

void partition_clients(InteractionDataset& ds, std::size_t n_clients, std::uint64_t seed) {
    if (!ds.split_done) throw std::logic_error("partition_clients: split the dataset first");
    if (n_clients < 1) throw std::invalid_argument("partition_clients: n_clients must be >= 1");
    if (n_clients > ds.n_users)
        throw std::invalid_argument("partition_clients: more clients than users");

    std::vector<std::uint32_t> users(ds.n_users);
    std::iota(users.begin(), users.end(), 0u);
    Rng rng(derive_seed(seed, seed_tag::kPartition));
    rng.shuffle(users);

    ds.partition.assign(n_clients, {});
    for (std::size_t p = 0; p < users.size(); ++p) {
        ds.partition[p % n_clients].push_back(users[p]);
    }
}

SemanticVectors load_semantic_vectors(const std::string& path, std::size_t expected_items) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_semantic_vectors: cannot open " + path);

    std::size_t n_items = 0, d_sem = 0;
    if (!(in >> n_items >> d_sem) || n_items == 0 || d_sem == 0)
        throw std::runtime_error("load_semantic_vectors: bad header in " + path);
    if (expected_items != 0 && n_items != expected_items) {
        throw std::runtime_error("load_semantic_vectors: file has " + std::to_string(n_items) +
                                 " rows, dataset has " + std::to_string(expected_items) +
                                 " items");
    }

    SemanticVectors sv;
    sv.values = Matrix(n_items, d_sem);
    for (std::size_t r = 0; r < n_items; ++r) {
        for (std::size_t c = 0; c < d_sem; ++c) {
            double x;
            if (!(in >> x))
                throw std::runtime_error("load_semantic_vectors: truncated at row " +
                                         std::to_string(r));
            if (!std::isfinite(x))
                throw std::runtime_error("load_semantic_vectors: non-finite value at row " +
                                         std::to_string(r));
            sv.values.at(r, c) = x;
        }
    }
    return sv;
}

void save_semantic_vectors(const std::string& path, const SemanticVectors& sv) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_semantic_vectors: cannot write " + path);
    out << sv.values.rows() << ' ' << sv.values.cols() << '\n';
    out.precision(17);
    for (std::size_t r = 0; r < sv.values.rows(); ++r) {
        auto row = sv.values.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? " " : "") << row[c];
        out << '\n';
    }
}

SemanticVectors synthesize_semantic_vectors(std::size_t n_items, std::size_t d_sem,
                                            std::uint64_t seed) {
    Rng rng(derive_seed(seed, seed_tag::kSemanticSynth));
    SemanticVectors sv;
    sv.values = Matrix::gaussian(n_items, d_sem, 1.0, rng);
    return sv;
}

std::vector<Interaction> sample_negatives(const InteractionDataset& ds, std::size_t client_id,
                                          std::size_t ratio, Rng& rng) {
    if (ds.partition.empty()) throw std::logic_error("sample_negatives: partition the dataset");

    std::vector<Interaction> negatives;
    std::size_t saturated_users = 0;
    for (std::uint32_t user : ds.partition[client_id]) {
        const auto& positives = ds.train_items_by_user[user];
        if (positives.empty()) continue;
        if (positives.size() >= ds.n_items) {
            ++saturated_users;
            continue;
        }
        std::size_t want = positives.size() * ratio;
        negatives.reserve(negatives.size() + want);
        for (std::size_t k = 0; k < want; ++k) {
            std::uint32_t item;
            do {
                item = static_cast<std::uint32_t>(rng.uniform_below(ds.n_items));
            } while (std::binary_search(positives.begin(), positives.end(), item));
            negatives.push_back({user, item, 0.0f});
        }
    }
    if (saturated_users > 0) {
        std::fprintf(stderr,
                     "sample_negatives: %zu user(s) interacted with every item, skipped\n",
                     saturated_users);
    }
    return negatives;
}

InteractionDataset inject_click_noise(const InteractionDataset& ds, double noise_ratio,
                                      std::uint64_t seed) {
    if (noise_ratio < 0.0 || noise_ratio > 1.0)
        throw std::invalid_argument("inject_click_noise: noise_ratio must be in [0,1]");

    InteractionDataset noisy = ds;
    if (noise_ratio == 0.0) return noisy;

    auto n_add = static_cast<std::size_t>(
        std::ceil(noise_ratio * static_cast<double>(ds.train.size())));
    Rng rng(derive_seed(seed, seed_tag::kClickNoise));
    std::size_t added = 0;
    std::size_t stuck = 0;
    while (added < n_add) {
        auto user = static_cast<std::uint32_t>(rng.uniform_below(noisy.n_users));
        auto& positives = noisy.train_items_by_user[user];
        if (positives.size() >= noisy.n_items) {
            if (++stuck > 64 * n_add) break;  // every user saturated
            continue;
        }
        std::uint32_t item;
        do {
            item = static_cast<std::uint32_t>(rng.uniform_below(noisy.n_items));
        } while (std::binary_search(positives.begin(), positives.end(), item));
        noisy.train.push_back({user, item, 1.0f});
        positives.insert(std::lower_bound(positives.begin(), positives.end(), item), item);
        ++added;
    }
    if (added < n_add) {
        std::fprintf(stderr, "inject_click_noise: only %zu of %zu noisy clicks placed\n", added,
                     n_add);
    }
    return noisy;
}

std::pair<InteractionDataset, SemanticVectors> make_synthetic_dataset(const SynthSpec& spec,
                                                                      std::uint64_t seed) {
    Rng rng(derive_seed(seed, seed_tag::kSynthData));
    const std::size_t r = spec.latent_dim;

    Matrix topics = Matrix::gaussian(spec.n_topics, r, 1.0, rng);

    // Items: topic center plus jitter, plus a power-law popularity offset.
    Matrix item_latent(spec.n_items, r);
    std::vector<double> popularity(spec.n_items);
    for (std::size_t j = 0; j < spec.n_items; ++j) {
        auto topic = static_cast<std::size_t>(rng.uniform_below(spec.n_topics));
        auto row = item_latent.row(j);
        auto center = topics.row(topic);
        for (std::size_t k = 0; k < r; ++k) row[k] = center[k] + 0.35 * rng.gaussian();
        popularity[j] = 0.4 * -std::log(1.0 - rng.uniform());
    }

    // Users: blend of two topic centers plus jitter.
    Matrix user_latent(spec.n_users, r);
    for (std::size_t i = 0; i < spec.n_users; ++i) {
        auto t1 = static_cast<std::size_t>(rng.uniform_below(spec.n_topics));
        auto t2 = static_cast<std::size_t>(rng.uniform_below(spec.n_topics));
        double w = 0.5 + 0.4 * rng.uniform();
        auto row = user_latent.row(i);
        auto c1 = topics.row(t1);
        auto c2 = topics.row(t2);
        for (std::size_t k = 0; k < r; ++k)
            row[k] = w * c1[k] + (1.0 - w) * c2[k] + 0.25 * rng.gaussian();
    }

    InteractionDataset ds;
    ds.n_users = spec.n_users;
    ds.n_items = spec.n_items;

    // Gumbel top-k = sampling without replacement proportional to
    // softmax(score / temperature).
    std::vector<std::pair<double, std::uint32_t>> keys(spec.n_items);
    std::vector<double> norm(r);
    for (std::size_t i = 0; i < spec.n_users; ++i) {
        double g = rng.gaussian();
        auto want = static_cast<std::size_t>(
            std::llround(static_cast<double>(spec.avg_items_per_user) * std::exp(0.6 * g - 0.18)));
        want = std::clamp<std::size_t>(want, 2, spec.n_items / 2);

        auto u = user_latent.row(i);
        double unorm = std::sqrt(kernels::sum_sq(u.data(), r)) + 1e-12;
        for (std::size_t k = 0; k < r; ++k) norm[k] = u[k] / unorm;
        for (std::uint32_t j = 0; j < spec.n_items; ++j) {
            auto w = item_latent.row(j);
            double wnorm = std::sqrt(kernels::sum_sq(w.data(), r)) + 1e-12;
            double score = kernels::dot(norm.data(), w.data(), r) / wnorm + popularity[j];
            double gumbel = -std::log(-std::log(std::max(rng.uniform(), 1e-300)));
            keys[j] = {score / spec.temperature + gumbel, j};
        }
        std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(want),
                          keys.end(), [](const auto& a, const auto& b) {
                              return a.first > b.first || (a.first == b.first && a.second < b.second);
                          });
        for (std::size_t k = 0; k < want; ++k)
            ds.train.push_back({static_cast<std::uint32_t>(i), keys[k].second, 1.0f});
    }

    // Semantic vectors: random linear image of the item latents plus noise.
    // Popularity rides along as an extra latent coordinate: item profiles in
    // the wild (titles, franchises, awards) leak engagement level, and the
    // semantic channel is supposed to be informative about it.
    Matrix projection = Matrix::gaussian(spec.d_sem, r + 1,
                                         1.0 / std::sqrt(static_cast<double>(r)), rng);
    SemanticVectors sv;
    sv.values = Matrix(spec.n_items, spec.d_sem);
    std::vector<double> extended(r + 1);
    for (std::size_t j = 0; j < spec.n_items; ++j) {
        auto w = item_latent.row(j);
        std::copy(w.begin(), w.end(), extended.begin());
        extended[r] = popularity[j];
        auto out = sv.values.row(j);
        for (std::size_t c = 0; c < spec.d_sem; ++c) {
            out[c] = kernels::dot(projection.row(c).data(), extended.data(), r + 1) +
                     spec.semantic_noise * rng.gaussian();
        }
    }
    return {std::move(ds), std::move(sv)};
}

}  // namespace rqfedrec
