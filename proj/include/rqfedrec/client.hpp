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
#include <span>
#include <vector>

#include "rqfedrec/data.hpp"
#include "rqfedrec/model.hpp"
#include "rqfedrec/protocol.hpp"

namespace rqfedrec {

// Dual-channel decode: (1-lambda) * sum of semantic code rows plus
// lambda * sum of collaborative code rows. Shared by client distillation,
// client item refresh and the server-side global reconstruction.
void dual_channel_decode_into(const CodebookSet& semantic,
                              const CodebookSet* collaborative,
                              const CodeAssignment& semantic_codes,
                              const CodeAssignment* collaborative_codes, std::size_t item,
                              double lambda, std::span<double> out);

// Dense distillation gradients for gradient checking; training uses a sparse
// equivalent. Returns the mean squared reconstruction error over `items`.
double distill_loss_and_grads(const Matrix& teacher, const CodebookSet& semantic,
                              const CodebookSet* collaborative,
                              const CodeAssignment& semantic_codes,
                              const CodeAssignment* collaborative_codes,
                              std::span<const std::uint32_t> items, double lambda,
                              std::vector<Matrix>* semantic_grads,
                              std::vector<Matrix>* collaborative_grads);

struct ClientConfig {
    std::size_t local_epochs = 1;
    std::size_t batch_size = 512;
    std::size_t negative_ratio = 4;
    AdamConfig model_opt;
    double codebook_lr = 1e-2;
    std::size_t codebook_steps = 100;
    double laplace_delta = 0.0;
};

// One federated participant. Owns its users' embeddings and a full local
// item table; rebuilds its local codebooks from each broadcast.
class ClientState {
  public:
    ClientState(std::uint32_t client_id, const InteractionDataset& ds, std::size_t d,
                std::uint64_t init_seed, ClientConfig config, double init_std = 0.01);

    std::uint32_t client_id() const { return id_; }
    std::uint64_t sample_weight() const { return sample_weight_; }
    const std::vector<std::uint32_t>& interacted_items() const { return interacted_items_; }
    const MfModel& model() const { return model_; }
    MfModel& model() { return model_; }
    double lambda() const { return lambda_; }

    // Adopt the round's lambda, code ids and global codebooks (local
    // codebooks start from the broadcast values).
    void receive_broadcast(const BroadcastPayload& payload);

    // One round of prediction-loss training on local positives plus freshly
    // sampled negatives. Returns per-epoch mean BCE (empty client: zeros).
    std::vector<double> local_train(Rng& negative_rng, Rng& shuffle_rng);

    // Copies the item table and adds iid Laplace(0, delta) per coordinate.
    // The copy is the distillation teacher; the live table is untouched.
    void perturb_items(double delta, Rng& rng);

    // Adam on the local codebook entries, code ids and teacher fixed, MSE
    // averaged over interacted items only. Returns the loss curve
    // (steps + 1 values; [0] is the pre-training loss).
    std::vector<double> train_codebooks();

    UploadPacket build_upload() const;

    // Item refresh: every row of the live item table is replaced by
    // the dual-channel decode from the *global* codebooks.
    void refresh_items(const CodebookSet& global_semantic,
                       const CodebookSet* global_collaborative, double lambda,
                       const CodeAssignment& semantic_codes,
                       const CodeAssignment* collaborative_codes);

    const CodebookSet& semantic_codebooks() const { return semantic_cb_; }
    const std::optional<CodebookSet>& collaborative_codebooks() const { return collab_cb_; }
    const Matrix& distill_teacher() const { return teacher_; }

  private:
    std::uint32_t id_;
    const InteractionDataset* ds_;
    ClientConfig cfg_;
    MfModel model_;
    OptimizerState opt_;
    std::vector<Interaction> local_train_data_;       // this client's D_k
    std::vector<std::uint32_t> interacted_items_;     // I_k, sorted
    std::uint64_t sample_weight_ = 0;

    double lambda_ = 0.0;
    CodebookSet semantic_cb_;
    std::optional<CodebookSet> collab_cb_;
    CodeAssignment semantic_codes_;
    std::optional<CodeAssignment> collab_codes_;
    Matrix teacher_;
    bool teacher_ready_ = false;
};

}  // namespace rqfedrec
