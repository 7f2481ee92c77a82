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
#include "rqfedrec/server.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include "rqfedrec/client.hpp"
#include "rqfedrec/kernels.hpp"

namespace rqfedrec {

ServerState::ServerState(ServerConfig config, std::uint64_t master_seed)
    : cfg_(config), master_seed_(master_seed) {
    if (cfg_.M == 0 || cfg_.L == 0 || cfg_.d == 0)
        throw std::invalid_argument("ServerState: M, L, d must be positive");
}

void ServerState::bootstrap_semantic(const SemanticVectors& vectors) {
    if (bootstrapped_) throw std::logic_error("bootstrap_semantic: already bootstrapped");
    if (!vectors.values.all_finite())
        throw std::invalid_argument("bootstrap_semantic: non-finite semantic vectors");

    auto rq = rq_kmeans(vectors.values, cfg_.M, cfg_.L, cfg_.kmeans_iters,
                        derive_seed(master_seed_, seed_tag::kSemanticRq));
    semantic_codes_ = std::move(rq.codes);  // frozen for the entire run

    Rng rng(derive_seed(master_seed_, seed_tag::kServerInit));
    semantic_cb_ =
        CodebookSet::gaussian(Channel::semantic, cfg_.L, cfg_.M, cfg_.d, cfg_.init_std, rng);
    bootstrapped_ = true;
}

double ServerState::lambda_schedule(std::size_t t, std::size_t T_warm, bool collab_exists) {
    if (T_warm == 0) throw std::invalid_argument("lambda_schedule: T_warm must be positive");
    if (!collab_exists) return 0.0;
    return std::min(1.0, static_cast<double>(t) / static_cast<double>(T_warm));
}

double ServerState::lambda_for_round(std::size_t t) const {
    return lambda_schedule(t, cfg_.T_warm, has_collaborative());
}

void ServerState::aggregate(const std::vector<UploadPacket>& packets) {
    if (packets.empty()) throw std::invalid_argument("aggregate: no packets");

    const bool collab = packets.front().collaborative.has_value();
    double total_weight = 0.0;
    for (const UploadPacket& p : packets) {
        if (!p.semantic.same_shape(semantic_cb_))
            throw std::invalid_argument("aggregate: semantic codebook shape mismatch");
        if (p.collaborative.has_value() != collab)
            throw std::invalid_argument("aggregate: inconsistent channel presence");
        if (collab && (!collab_cb_ || !p.collaborative->same_shape(*collab_cb_)))
            throw std::invalid_argument("aggregate: collaborative codebook shape mismatch");
        total_weight += static_cast<double>(p.sample_weight);
    }
    if (total_weight <= 0.0) throw std::invalid_argument("aggregate: total weight is zero");

    auto weighted_mean = [&](auto channel_of) {
        CodebookSet out = CodebookSet::zeros(channel_of(packets.front())->channel, cfg_.L,
                                             cfg_.M, cfg_.d);
        for (const UploadPacket& p : packets) {
            double w = static_cast<double>(p.sample_weight) / total_weight;
            if (w == 0.0) continue;
            const CodebookSet* cb = channel_of(p);
            for (std::size_t l = 0; l < cfg_.L; ++l) {
                kernels::axpy(w, cb->levels[l].data(), out.levels[l].data(),
                              out.levels[l].size());
            }
        }
        return out;
    };

    semantic_cb_ = weighted_mean([](const UploadPacket& p) { return &p.semantic; });
    if (collab && collab_cb_) {
        *collab_cb_ =
            weighted_mean([](const UploadPacket& p) { return &*p.collaborative; });
    }
}

Matrix ServerState::reconstruct_global_items(double lambda) const {
    if (!bootstrapped_) throw std::logic_error("reconstruct_global_items: bootstrap first");
    if (!has_collaborative()) lambda = 0.0;
    Matrix items(semantic_codes_.n_items, cfg_.d);
    for (std::size_t i = 0; i < items.rows(); ++i) {
        dual_channel_decode_into(semantic_cb_, global_collaborative(), semantic_codes_,
                                 collaborative_codes(), i, lambda, items.row(i));
    }
    return items;
}

void ServerState::refresh_collaborative_codes(std::size_t round, std::uint64_t seed) {
    if (!bootstrapped_) throw std::logic_error("refresh_collaborative_codes: bootstrap first");
    if (cfg_.tau == 0 || round % cfg_.tau != 0)
        throw std::logic_error("refresh_collaborative_codes: called off-schedule");

    // The grouping signal sums BOTH channels regardless of the curriculum
    // weight. Using the lambda blend here would, at lambda -> 1, cluster the
    // collaborative decode of the previous clustering: a self-quantization
    // loop that merges items until the id structure collapses. The semantic
    // channel stays in as the anchor. Rows are L2-normalized afterwards, so
    // equal weighting is a direction choice, not a scale one.
    Matrix items(semantic_codes_.n_items, cfg_.d);
    std::vector<double> collab_part(cfg_.d);
    for (std::size_t i = 0; i < items.rows(); ++i) {
        auto row = items.row(i);
        dual_channel_decode_into(semantic_cb_, nullptr, semantic_codes_, nullptr, i, 0.0, row);
        if (collab_cb_) {
            dual_channel_decode_into(*collab_cb_, nullptr, *collab_codes_, nullptr, i, 0.0,
                                     collab_part);
            kernels::axpy(1.0, collab_part.data(), row.data(), cfg_.d);
        }
    }
    for (std::size_t i = 0; i < items.rows(); ++i) {
        auto row = items.row(i);
        double norm = std::sqrt(kernels::sum_sq(row.data(), row.size()));
        if (norm > 0.0) kernels::scale(row.data(), 1.0 / norm, row.size());
    }

    auto rq = rq_kmeans(items, cfg_.M, cfg_.L, cfg_.kmeans_iters, seed, Channel::collaborative);
    if (!collab_cb_) {
        collab_codes_ = std::move(rq.codes);
        // First creation: zero codebooks, so the collaborative contribution
        // starts from nothing instead of injecting random signal.
        collab_cb_ = CodebookSet::zeros(Channel::collaborative, cfg_.L, cfg_.M, cfg_.d);
    } else {
        // Cluster ids are arbitrary names. The codebook values survive the
        // refresh, so relabel each level's fresh clusters to maximize member
        // overlap with the outgoing assignment; most items keep indexing the
        // entries that were trained for them.
        align_labels_with(*collab_codes_, rq.codes);
        collab_codes_ = std::move(rq.codes);
    }
}

void align_labels_with(const CodeAssignment& previous, CodeAssignment& fresh) {
    if (previous.n_items != fresh.n_items || previous.L != fresh.L || previous.M != fresh.M)
        return;
    const std::size_t M = fresh.M;
    std::vector<std::size_t> overlap(M * M);
    for (std::size_t level = 0; level < fresh.L; ++level) {
        std::fill(overlap.begin(), overlap.end(), 0);
        for (std::size_t i = 0; i < fresh.n_items; ++i) {
            auto fresh_code = static_cast<std::size_t>(fresh.row(i)[level]);
            auto old_code = static_cast<std::size_t>(previous.row(i)[level]);
            ++overlap[fresh_code * M + old_code];
        }
        // Greedy assignment by descending overlap.
        std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> pairs;
        pairs.reserve(M * M);
        for (std::size_t f = 0; f < M; ++f)
            for (std::size_t o = 0; o < M; ++o)
                if (overlap[f * M + o] > 0) pairs.push_back({overlap[f * M + o], f, o});
        std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
            if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
            if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
            return std::get<2>(a) < std::get<2>(b);
        });
        std::vector<std::int32_t> relabel(M, -1);
        std::vector<bool> target_used(M, false);
        for (const auto& [count, f, o] : pairs) {
            if (relabel[f] >= 0 || target_used[o]) continue;
            relabel[f] = static_cast<std::int32_t>(o);
            target_used[o] = true;
        }
        std::size_t next_free = 0;
        for (std::size_t f = 0; f < M; ++f) {
            if (relabel[f] >= 0) continue;
            while (target_used[next_free]) ++next_free;
            relabel[f] = static_cast<std::int32_t>(next_free);
            target_used[next_free] = true;
        }
        for (std::size_t i = 0; i < fresh.n_items; ++i) {
            auto& code = fresh.row(i)[level];
            code = relabel[static_cast<std::size_t>(code)];
        }
    }
}

BroadcastPayload ServerState::build_broadcast(std::size_t round) const {
    if (!bootstrapped_) throw std::logic_error("build_broadcast: bootstrap first");
    BroadcastPayload payload;
    payload.round = static_cast<std::uint32_t>(round);
    payload.lambda = lambda_for_round(round);
    payload.semantic = semantic_cb_;
    if (round == 1) payload.semantic_codes = semantic_codes_;
    if (collab_cb_) {
        payload.collaborative = collab_cb_;
        payload.collaborative_codes = collab_codes_;
    }
    return payload;
}

}  // namespace rqfedrec
