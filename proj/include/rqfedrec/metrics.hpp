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

#include <span>

#include "rqfedrec/data.hpp"
#include "rqfedrec/model.hpp"

namespace rqfedrec {

enum class EvalSplit { val, test };

struct RankingMetrics {
    double recall = 0.0;
    double mrr = 0.0;
    double ndcg = 0.0;
    std::size_t users_evaluated = 0;
    std::size_t users_skipped = 0;  // had split items but no owning client
};

// Full-catalog ranking evaluation, macro-averaged over users with at least
// one item in the split. Each user is scored by the model of the client
// owning it; the user's train positives are masked, plus its val positives
// when scoring test. Ties break toward the lower item id.
RankingMetrics evaluate(std::span<const MfModel* const> client_models,
                        const InteractionDataset& ds, EvalSplit split, std::size_t K = 10);

}  // namespace rqfedrec
