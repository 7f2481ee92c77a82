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
#include "rqfedrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rqfedrec {

RankingMetrics evaluate(std::span<const MfModel* const> client_models,
                        const InteractionDataset& ds, EvalSplit split, std::size_t K) {
    if (ds.partition.empty()) throw std::logic_error("evaluate: dataset has no partition");
    const auto& split_items = (split == EvalSplit::val) ? ds.val : ds.test;

    std::vector<std::vector<std::uint32_t>> relevant(ds.n_users);
    for (const Interaction& it : split_items) relevant[it.user].push_back(it.item);
    std::vector<std::vector<std::uint32_t>> val_by_user;
    if (split == EvalSplit::test) {
        val_by_user.resize(ds.n_users);
        for (const Interaction& it : ds.val) val_by_user[it.user].push_back(it.item);
    }

    std::vector<std::int32_t> owner(ds.n_users, -1);
    for (std::size_t c = 0; c < ds.partition.size(); ++c)
        for (std::uint32_t u : ds.partition[c]) owner[u] = static_cast<std::int32_t>(c);

    RankingMetrics out;
    std::vector<double> scores(ds.n_items);
    std::vector<std::uint32_t> order(ds.n_items);
    double recall_sum = 0.0, mrr_sum = 0.0, ndcg_sum = 0.0;

    for (std::uint32_t u = 0; u < ds.n_users; ++u) {
        auto& rel = relevant[u];
        if (rel.empty()) continue;
        if (owner[u] < 0 ||
            static_cast<std::size_t>(owner[u]) >= client_models.size() ||
            client_models[static_cast<std::size_t>(owner[u])] == nullptr) {
            ++out.users_skipped;
            continue;
        }
        const MfModel& model = *client_models[static_cast<std::size_t>(owner[u])];
        model.score_all_items(u, scores);

        for (std::uint32_t item : ds.train_items_by_user[u])
            scores[item] = -std::numeric_limits<double>::infinity();
        if (split == EvalSplit::test) {
            for (std::uint32_t item : val_by_user[u])
                scores[item] = -std::numeric_limits<double>::infinity();
        }

        std::sort(rel.begin(), rel.end());
        const std::size_t k = std::min(K, ds.n_items);
        std::iota(order.begin(), order.end(), 0u);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                          order.end(), [&](std::uint32_t a, std::uint32_t b) {
                              return scores[a] > scores[b] ||
                                     (scores[a] == scores[b] && a < b);
                          });

        std::size_t hits = 0;
        std::size_t first_hit_rank = 0;  // 1-based; 0 = none
        double dcg = 0.0;
        for (std::size_t r = 0; r < k; ++r) {
            if (std::binary_search(rel.begin(), rel.end(), order[r])) {
                ++hits;
                if (first_hit_rank == 0) first_hit_rank = r + 1;
                dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
            }
        }
        double idcg = 0.0;
        for (std::size_t r = 0; r < std::min(k, rel.size()); ++r)
            idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);

        recall_sum +=
            static_cast<double>(hits) / static_cast<double>(std::min(k, rel.size()));
        mrr_sum += first_hit_rank ? 1.0 / static_cast<double>(first_hit_rank) : 0.0;
        ndcg_sum += idcg > 0.0 ? dcg / idcg : 0.0;
        ++out.users_evaluated;
    }

    if (out.users_evaluated > 0) {
        auto n = static_cast<double>(out.users_evaluated);
        out.recall = recall_sum / n;
        out.mrr = mrr_sum / n;
        out.ndcg = ndcg_sum / n;
    }
    return out;
}

}  // namespace rqfedrec
