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
#include "rqfedrec/client.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rqfedrec/kernels.hpp"

namespace rqfedrec {

void dual_channel_decode_into(const CodebookSet& semantic, const CodebookSet* collaborative,
                              const CodeAssignment& semantic_codes,
                              const CodeAssignment* collaborative_codes, std::size_t item,
                              double lambda, std::span<double> out) {
    if (lambda < 0.0 || lambda > 1.0)
        throw std::invalid_argument("decode: lambda must be in [0,1]");
    if (lambda > 0.0 && (collaborative == nullptr || collaborative_codes == nullptr))
        throw std::invalid_argument("decode: lambda > 0 without a collaborative channel");

    const std::size_t d = out.size();
    std::fill(out.begin(), out.end(), 0.0);
    auto srow = semantic_codes.row(item);
    for (std::size_t l = 0; l < semantic.L(); ++l) {
        kernels::axpy(1.0, semantic.levels[l].row(static_cast<std::size_t>(srow[l])).data(),
                      out.data(), d);
    }
    if (lambda == 0.0) return;

    kernels::scale(out.data(), 1.0 - lambda, d);
    auto crow = collaborative_codes->row(item);
    for (std::size_t l = 0; l < collaborative->L(); ++l) {
        kernels::axpy(lambda,
                      collaborative->levels[l].row(static_cast<std::size_t>(crow[l])).data(),
                      out.data(), d);
    }
}

double distill_loss_and_grads(const Matrix& teacher, const CodebookSet& semantic,
                              const CodebookSet* collaborative,
                              const CodeAssignment& semantic_codes,
                              const CodeAssignment* collaborative_codes,
                              std::span<const std::uint32_t> items, double lambda,
                              std::vector<Matrix>* semantic_grads,
                              std::vector<Matrix>* collaborative_grads) {
    const std::size_t d = teacher.cols();
    auto reset = [&](std::vector<Matrix>* grads, const CodebookSet& cb) {
        if (!grads) return;
        grads->resize(cb.L());
        for (std::size_t l = 0; l < cb.L(); ++l) {
            (*grads)[l] = Matrix(cb.M(), d);
        }
    };
    reset(semantic_grads, semantic);
    if (collaborative) reset(collaborative_grads, *collaborative);
    if (items.empty()) return 0.0;

    const double inv_n = 1.0 / static_cast<double>(items.size());
    std::vector<double> decoded(d);
    std::vector<double> residual(d);
    double loss = 0.0;
    for (std::uint32_t item : items) {
        dual_channel_decode_into(semantic, collaborative, semantic_codes, collaborative_codes,
                                 item, lambda, decoded);
        auto target = teacher.row(item);
        loss += kernels::l2sq(target.data(), decoded.data(), d);
        // d/d(decoded) of mean ||teacher - decoded||^2
        kernels::blend(residual.data(), 2.0 * inv_n, decoded.data(), -2.0 * inv_n, target.data(),
                       d);
        if (semantic_grads) {
            auto srow = semantic_codes.row(item);
            for (std::size_t l = 0; l < semantic.L(); ++l) {
                kernels::axpy(1.0 - lambda, residual.data(),
                              (*semantic_grads)[l].row(static_cast<std::size_t>(srow[l])).data(),
                              d);
            }
        }
        if (collaborative && collaborative_grads && lambda > 0.0) {
            auto crow = collaborative_codes->row(item);
            for (std::size_t l = 0; l < collaborative->L(); ++l) {
                kernels::axpy(
                    lambda, residual.data(),
                    (*collaborative_grads)[l].row(static_cast<std::size_t>(crow[l])).data(), d);
            }
        }
    }
    return loss * inv_n;
}

ClientState::ClientState(std::uint32_t client_id, const InteractionDataset& ds, std::size_t d,
                         std::uint64_t init_seed, ClientConfig config, double init_std)
    : id_(client_id),
      ds_(&ds),
      cfg_(config),
      model_(ds.partition.at(client_id), ds.n_items, d, init_seed, init_std),
      opt_(model_, config.model_opt) {
    for (std::uint32_t user : ds.partition[client_id]) {
        for (std::uint32_t item : ds.train_items_by_user[user]) {
            local_train_data_.push_back({user, item, 1.0f});
            interacted_items_.push_back(item);
        }
    }
    std::sort(interacted_items_.begin(), interacted_items_.end());
    interacted_items_.erase(std::unique(interacted_items_.begin(), interacted_items_.end()),
                            interacted_items_.end());
    sample_weight_ = local_train_data_.size();
}

void ClientState::receive_broadcast(const BroadcastPayload& payload) {
    lambda_ = payload.lambda;
    semantic_cb_ = payload.semantic;
    if (payload.collaborative) collab_cb_ = *payload.collaborative;
    if (payload.semantic_codes) semantic_codes_ = *payload.semantic_codes;
    if (payload.collaborative_codes) collab_codes_ = *payload.collaborative_codes;
    if (collab_cb_ && !collab_codes_)
        throw std::logic_error("client: collaborative codebooks without code ids");
    teacher_ready_ = false;
}

std::vector<double> ClientState::local_train(Rng& negative_rng, Rng& shuffle_rng) {
    std::vector<double> losses(cfg_.local_epochs, 0.0);
    if (local_train_data_.empty()) return losses;

    std::vector<Interaction> examples = local_train_data_;
    auto negatives = sample_negatives(*ds_, id_, cfg_.negative_ratio, negative_rng);
    examples.insert(examples.end(), negatives.begin(), negatives.end());

    for (std::size_t e = 0; e < cfg_.local_epochs; ++e)
        losses[e] = train_epoch(model_, opt_, examples, cfg_.batch_size, shuffle_rng);
    return losses;
}

void ClientState::perturb_items(double delta, Rng& rng) {
    if (delta < 0.0) throw std::invalid_argument("perturb_items: negative noise scale");
    teacher_ = model_.item_table();
    if (delta > 0.0) {
        double* p = teacher_.data();
        for (std::size_t i = 0; i < teacher_.size(); ++i) p[i] += rng.laplace(delta);
    }
    teacher_ready_ = true;
}

std::vector<double> ClientState::train_codebooks() {
    if (!teacher_ready_) throw std::logic_error("train_codebooks: perturb_items first");
    const std::size_t steps = cfg_.codebook_steps;
    std::vector<double> curve;
    curve.reserve(steps + 1);

    const std::size_t d = model_.dim();
    const double lambda = lambda_;
    const bool use_collab = collab_cb_.has_value() && lambda > 0.0;
    CodebookSet* collab = collab_cb_ ? &*collab_cb_ : nullptr;
    const CodeAssignment* collab_codes = collab_codes_ ? &*collab_codes_ : nullptr;

    auto loss_only = [&] {
        std::vector<double> decoded(d);
        double loss = 0.0;
        for (std::uint32_t item : interacted_items_) {
            dual_channel_decode_into(semantic_cb_, collab, semantic_codes_, collab_codes, item,
                                     lambda, decoded);
            loss += kernels::l2sq(teacher_.row(item).data(), decoded.data(), d);
        }
        return interacted_items_.empty() ? 0.0
                                         : loss / static_cast<double>(interacted_items_.size());
    };

    if (interacted_items_.empty()) {
        curve.assign(steps + 1, 0.0);
        return curve;  // nothing to learn; codebooks stay at broadcast values
    }

    // Entries actually referenced by I_k, per channel and level. Everything
    // else must come out of this function bitwise unchanged.
    struct TouchedLevel {
        std::vector<std::uint32_t> entries;
        Matrix grad, m, v;
    };
    auto collect = [&](const CodebookSet& cb, const CodeAssignment& codes) {
        std::vector<TouchedLevel> levels(cb.L());
        for (std::size_t l = 0; l < cb.L(); ++l) {
            auto& tl = levels[l];
            for (std::uint32_t item : interacted_items_)
                tl.entries.push_back(static_cast<std::uint32_t>(codes.row(item)[l]));
            std::sort(tl.entries.begin(), tl.entries.end());
            tl.entries.erase(std::unique(tl.entries.begin(), tl.entries.end()),
                             tl.entries.end());
            tl.grad = Matrix(cb.M(), d);
            tl.m = Matrix(cb.M(), d);
            tl.v = Matrix(cb.M(), d);
        }
        return levels;
    };
    auto sem_touched = collect(semantic_cb_, semantic_codes_);
    std::vector<TouchedLevel> collab_touched;
    if (use_collab) collab_touched = collect(*collab, *collab_codes);

    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::vector<double> decoded(d);
    std::vector<double> residual(d);
    const double inv_n = 1.0 / static_cast<double>(interacted_items_.size());

    for (std::size_t step = 1; step <= steps; ++step) {
        double loss = 0.0;
        for (std::uint32_t item : interacted_items_) {
            dual_channel_decode_into(semantic_cb_, collab, semantic_codes_, collab_codes, item,
                                     lambda, decoded);
            auto target = teacher_.row(item);
            loss += kernels::l2sq(target.data(), decoded.data(), d);
            kernels::blend(residual.data(), 2.0 * inv_n, decoded.data(), -2.0 * inv_n,
                           target.data(), d);
            auto srow = semantic_codes_.row(item);
            for (std::size_t l = 0; l < semantic_cb_.L(); ++l) {
                kernels::axpy(1.0 - lambda, residual.data(),
                              sem_touched[l].grad.row(static_cast<std::size_t>(srow[l])).data(),
                              d);
            }
            if (use_collab) {
                auto crow = collab_codes->row(item);
                for (std::size_t l = 0; l < collab->L(); ++l) {
                    kernels::axpy(
                        lambda, residual.data(),
                        collab_touched[l].grad.row(static_cast<std::size_t>(crow[l])).data(), d);
                }
            }
        }
        curve.push_back(loss * inv_n);

        double bias1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        double bias2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        auto apply = [&](std::vector<TouchedLevel>& touched, CodebookSet& cb) {
            for (std::size_t l = 0; l < cb.L(); ++l) {
                auto& tl = touched[l];
                for (std::uint32_t entry : tl.entries) {
                    kernels::adam_step(cb.levels[l].row(entry).data(), tl.m.row(entry).data(),
                                       tl.v.row(entry).data(), tl.grad.row(entry).data(), d,
                                       cfg_.codebook_lr, beta1, beta2, eps, bias1, bias2);
                    std::fill_n(tl.grad.row(entry).data(), d, 0.0);
                }
            }
        };
        apply(sem_touched, semantic_cb_);
        if (use_collab) apply(collab_touched, *collab);
    }
    // curve[s] is the loss before step s+1; append the post-training loss.
    curve.push_back(loss_only());
    return curve;
}

UploadPacket ClientState::build_upload() const {
    UploadPacket packet;
    packet.client_id = id_;
    packet.sample_weight = sample_weight_;
    packet.semantic = semantic_cb_;
    packet.collaborative = collab_cb_;

    // Privacy surface: every matrix leaving the client must be an M-row
    // codebook level, never an item- or user-indexed table.
    auto check = [&](const CodebookSet& cb) {
        for (const Matrix& level : cb.levels) {
            if (level.rows() != cb.M() || level.cols() != model_.dim())
                throw std::logic_error("build_upload: non-codebook matrix in packet");
        }
    };
    check(packet.semantic);
    if (packet.collaborative) check(*packet.collaborative);
    return packet;
}

void ClientState::refresh_items(const CodebookSet& global_semantic,
                                const CodebookSet* global_collaborative, double lambda,
                                const CodeAssignment& semantic_codes,
                                const CodeAssignment* collaborative_codes) {
    if (global_semantic.dim() != model_.dim())
        throw std::invalid_argument("refresh_items: dimension mismatch");
    if (semantic_codes.n_items != model_.n_items())
        throw std::invalid_argument("refresh_items: code table size mismatch");
    if (global_collaborative == nullptr) lambda = 0.0;

    Matrix& items = model_.mutable_item_table();
    for (std::size_t i = 0; i < items.rows(); ++i) {
        dual_channel_decode_into(global_semantic, global_collaborative, semantic_codes,
                                 collaborative_codes, i, lambda, items.row(i));
    }
}

}  // namespace rqfedrec
