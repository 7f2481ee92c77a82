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
#include <span>
#include <unordered_map>
#include <vector>

#include "rqfedrec/data.hpp"
#include "rqfedrec/matrix.hpp"

namespace rqfedrec {

struct AdamConfig {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-6;  // decoupled, applied to touched rows only
};

// Matrix-factorization backbone. Each client instantiates one over its own
// users; the item table always spans the full catalog.
class MfModel {
  public:
    // `users`: global ids of the users this model owns. Tables start
    // Gaussian(0, init_std).
    MfModel(std::vector<std::uint32_t> users, std::size_t n_items, std::size_t d,
            std::uint64_t seed, double init_std = 0.01);

    std::size_t dim() const { return d_; }
    std::size_t n_items() const { return item_table_.rows(); }

    bool owns_user(std::uint32_t global_user) const {
        return user_rows_.count(global_user) != 0;
    }
    std::span<const double> user_vec(std::uint32_t global_user) const;
    std::span<const double> item_vec(std::uint32_t item) const { return item_table_.row(item); }

    // Raw dot product; what ranking sorts by.
    double score(std::uint32_t global_user, std::uint32_t item) const;
    void score_all_items(std::uint32_t global_user, std::span<double> out) const;

    // sigmoid(score), in (0,1).
    double predict(std::uint32_t global_user, std::uint32_t item) const;

    Matrix& user_table() { return user_table_; }
    const Matrix& user_table() const { return user_table_; }
    const Matrix& item_table() const { return item_table_; }
    Matrix& mutable_item_table() { return item_table_; }

    void set_item_table(const Matrix& table);
    Matrix get_item_table() const { return item_table_; }

    const std::unordered_map<std::uint32_t, std::uint32_t>& user_rows() const {
        return user_rows_;
    }

  private:
    std::size_t d_;
    Matrix user_table_;  // n_local_users x d
    Matrix item_table_;  // n_items x d
    std::unordered_map<std::uint32_t, std::uint32_t> user_rows_;
};

// Adam moments mirroring both tables plus the shared step counter.
class OptimizerState {
  public:
    OptimizerState(const MfModel& model, AdamConfig config);

    AdamConfig config;
    Matrix user_m, user_v;
    Matrix item_m, item_v;
    std::uint64_t step = 0;
};

double sigmoid(double z);

// Mean binary cross-entropy over `examples`, predictions clamped to
// [1e-7, 1-1e-7]. When grads are non-null they receive d(mean BCE)/d(table)
// as dense matrices shaped like the tables (no optimizer involvement).
double bce_loss_and_grads(const MfModel& model, std::span<const Interaction> examples,
                          Matrix* user_grads, Matrix* item_grads);

// One shuffled pass of mini-batch Adam over the examples. Returns the mean
// BCE across the epoch. Throws if the loss goes non-finite.
double train_epoch(MfModel& model, OptimizerState& opt, std::span<const Interaction> examples,
                   std::size_t batch_size, Rng& rng);

}  // namespace rqfedrec
