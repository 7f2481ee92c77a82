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
#include "rqfedrec/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rqfedrec/kernels.hpp"

namespace rqfedrec {

namespace {
constexpr double kProbClamp = 1e-7;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

MfModel::MfModel(std::vector<std::uint32_t> users, std::size_t n_items, std::size_t d,
                 std::uint64_t seed, double init_std)
    : d_(d) {
    Rng rng(seed);
    user_table_ = Matrix::gaussian(users.size(), d, init_std, rng);
    item_table_ = Matrix::gaussian(n_items, d, init_std, rng);
    user_rows_.reserve(users.size());
    for (std::size_t i = 0; i < users.size(); ++i)
        user_rows_.emplace(users[i], static_cast<std::uint32_t>(i));
}

std::span<const double> MfModel::user_vec(std::uint32_t global_user) const {
    auto it = user_rows_.find(global_user);
    if (it == user_rows_.end())
        throw std::out_of_range("MfModel: user " + std::to_string(global_user) +
                                " not on this client");
    return user_table_.row(it->second);
}

double MfModel::score(std::uint32_t global_user, std::uint32_t item) const {
    auto u = user_vec(global_user);
    return kernels::dot(u.data(), item_table_.row(item).data(), d_);
}

void MfModel::score_all_items(std::uint32_t global_user, std::span<double> out) const {
    auto u = user_vec(global_user);
    for (std::size_t i = 0; i < item_table_.rows(); ++i)
        out[i] = kernels::dot(u.data(), item_table_.row(i).data(), d_);
}

double MfModel::predict(std::uint32_t global_user, std::uint32_t item) const {
    return sigmoid(score(global_user, item));
}

void MfModel::set_item_table(const Matrix& table) {
    require_same_shape(table, item_table_, "set_item_table");
    item_table_ = table;
}

OptimizerState::OptimizerState(const MfModel& model, AdamConfig cfg)
    : config(cfg),
      user_m(model.user_table().rows(), model.dim()),
      user_v(model.user_table().rows(), model.dim()),
      item_m(model.item_table().rows(), model.dim()),
      item_v(model.item_table().rows(), model.dim()) {}

double bce_loss_and_grads(const MfModel& model, std::span<const Interaction> examples,
                          Matrix* user_grads, Matrix* item_grads) {
    if (user_grads) user_grads->fill(0.0);
    if (item_grads) item_grads->fill(0.0);
    if (examples.empty()) return 0.0;

    const std::size_t d = model.dim();
    const double inv_n = 1.0 / static_cast<double>(examples.size());
    double loss = 0.0;
    for (const Interaction& ex : examples) {
        auto u = model.user_vec(ex.user);
        auto v = model.item_vec(ex.item);
        double p = sigmoid(kernels::dot(u.data(), v.data(), d));
        double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
        double y = ex.label;
        loss += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
        double g = (p - y) * inv_n;
        if (user_grads) {
            auto row = user_grads->row(model.user_rows().at(ex.user));
            kernels::axpy(g, v.data(), row.data(), d);
        }
        if (item_grads) kernels::axpy(g, u.data(), item_grads->row(ex.item).data(), d);
    }
    return loss * inv_n;
}

namespace {

// Sparse mini-batch Adam over one table: gradients are accumulated into a
// dense scratch matrix but only touched rows are stepped and re-zeroed.
class RowUpdater {
  public:
    RowUpdater(Matrix& table, Matrix& m, Matrix& v, std::size_t rows, std::size_t d)
        : table_(table), m_(m), v_(v), grad_(rows, d), touched_flag_(rows, 0) {}

    void accumulate(std::size_t row, double coeff, const double* vec, std::size_t d) {
        if (!touched_flag_[row]) {
            touched_flag_[row] = 1;
            touched_.push_back(row);
        }
        kernels::axpy(coeff, vec, grad_.row(row).data(), d);
    }

    void step(const AdamConfig& cfg, double bias1, double bias2, std::size_t d) {
        const double decay = 1.0 - cfg.lr * cfg.weight_decay;
        for (std::size_t row : touched_) {
            auto w = table_.row(row);
            if (cfg.weight_decay != 0.0) kernels::scale(w.data(), decay, d);
            kernels::adam_step(w.data(), m_.row(row).data(), v_.row(row).data(),
                               grad_.row(row).data(), d, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps,
                               bias1, bias2);
            std::fill_n(grad_.row(row).data(), d, 0.0);
            touched_flag_[row] = 0;
        }
        touched_.clear();
    }

  private:
    Matrix& table_;
    Matrix& m_;
    Matrix& v_;
    Matrix grad_;
    std::vector<std::uint8_t> touched_flag_;
    std::vector<std::size_t> touched_;
};

}  // namespace

double train_epoch(MfModel& model, OptimizerState& opt, std::span<const Interaction> examples,
                   std::size_t batch_size, Rng& rng) {
    if (examples.empty()) return 0.0;
    if (batch_size == 0) throw std::invalid_argument("train_epoch: batch_size must be >= 1");

    const std::size_t d = model.dim();
    std::vector<std::uint32_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0u);
    rng.shuffle(order);

    Matrix& user_table = model.user_table();
    Matrix& item_table = model.mutable_item_table();
    RowUpdater users(user_table, opt.user_m, opt.user_v, user_table.rows(), d);
    RowUpdater items(item_table, opt.item_m, opt.item_v, item_table.rows(), d);

    double loss_sum = 0.0;
    const AdamConfig& cfg = opt.config;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        std::size_t end = std::min(start + batch_size, order.size());
        const double inv_b = 1.0 / static_cast<double>(end - start);

        for (std::size_t k = start; k < end; ++k) {
            const Interaction& ex = examples[order[k]];
            std::size_t urow = model.user_rows().at(ex.user);
            auto u = user_table.row(urow);
            auto v = item_table.row(ex.item);
            double p = sigmoid(kernels::dot(u.data(), v.data(), d));
            double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
            double y = ex.label;
            loss_sum += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
            double g = (p - y) * inv_b;
            users.accumulate(urow, g, v.data(), d);
            items.accumulate(ex.item, g, u.data(), d);
        }

        ++opt.step;
        double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(opt.step));
        double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(opt.step));
        users.step(cfg, bias1, bias2, d);
        items.step(cfg, bias1, bias2, d);
    }

    double mean_loss = loss_sum / static_cast<double>(examples.size());
    if (!std::isfinite(mean_loss))
        throw std::runtime_error("train_epoch: loss diverged to non-finite value");
    return mean_loss;
}

}  // namespace rqfedrec
