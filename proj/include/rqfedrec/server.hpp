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

#include <optional>
#include <vector>

#include "rqfedrec/data.hpp"
#include "rqfedrec/protocol.hpp"

namespace rqfedrec {

// Relabels `fresh`'s clusters per level to maximize member overlap with
// `previous`. Cluster ids are arbitrary, and the collaborative codebook
// values outlive an id refresh, so keeping labels aligned keeps items
// pointing at the entries trained for them. No-op on shape mismatch.
void align_labels_with(const CodeAssignment& previous, CodeAssignment& fresh);

struct ServerConfig {
    std::size_t M = 256;
    std::size_t L = 3;
    std::size_t d = 512;
    std::size_t tau = 10;      // collaborative id refresh period
    std::size_t T_warm = 100;  // curriculum warm-up length
    std::size_t kmeans_iters = 50;
    double init_std = 0.01;
};

// Global state: codebooks, frozen semantic ids, periodically refreshed
// collaborative ids, curriculum schedule, aggregation.
class ServerState {
  public:
    ServerState(ServerConfig config, std::uint64_t master_seed);

    // Runs RQ-Kmeans over the semantic vectors to freeze the semantic code
    // ids, then initializes fresh Gaussian model-space codebooks. The RQ
    // centroids live in semantic space and only supply the grouping.
    void bootstrap_semantic(const SemanticVectors& vectors);

    // Warm-up schedule: 0 while no collaborative channel exists, otherwise
    // min(1, t / T_warm).
    static double lambda_schedule(std::size_t t, std::size_t T_warm, bool collab_exists);
    double lambda_for_round(std::size_t t) const;

    // Weighted average of client codebooks by sample weight, per channel and
    // level.
    void aggregate(const std::vector<UploadPacket>& packets);

    // Dual-channel decode of every item from the current global codebooks.
    Matrix reconstruct_global_items(double lambda) const;

    // Every tau rounds: rebuild collaborative code ids by RQ-Kmeans over the
    // row-normalized global reconstruction. First call creates the (zero)
    // collaborative codebooks; later calls change only the ids.
    void refresh_collaborative_codes(std::size_t round, std::uint64_t seed);

    // Start-of-round payload. Semantic ids ship only in round 1; the
    // collaborative channel ships whenever it exists.
    BroadcastPayload build_broadcast(std::size_t round) const;

    bool bootstrapped() const { return bootstrapped_; }
    bool has_collaborative() const { return collab_codes_.has_value(); }
    std::size_t n_items() const { return semantic_codes_.n_items; }
    const ServerConfig& config() const { return cfg_; }

    const CodebookSet& global_semantic() const { return semantic_cb_; }
    const CodebookSet* global_collaborative() const {
        return collab_cb_ ? &*collab_cb_ : nullptr;
    }
    const CodeAssignment& semantic_codes() const { return semantic_codes_; }
    const CodeAssignment* collaborative_codes() const {
        return collab_codes_ ? &*collab_codes_ : nullptr;
    }

  private:
    ServerConfig cfg_;
    std::uint64_t master_seed_;
    bool bootstrapped_ = false;
    CodebookSet semantic_cb_;
    std::optional<CodebookSet> collab_cb_;
    CodeAssignment semantic_codes_;
    std::optional<CodeAssignment> collab_codes_;
};

}  // namespace rqfedrec
