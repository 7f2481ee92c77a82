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
#include "rqfedrec/simulator.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "rqfedrec/kernels.hpp"

namespace rqfedrec {

CommCost comm_account(Method method, std::size_t n_items, std::size_t d, std::size_t M,
                      std::size_t L, std::size_t channels) {
    if (n_items == 0 || d == 0) throw std::invalid_argument("comm_account: zero dimensions");
    CommCost cost;
    switch (method) {
        case Method::fedmf:
        case Method::local:
            cost.upload = n_items * d;
            cost.download = n_items * d;
            break;
        case Method::rqfedrec:
            if (M == 0 || L == 0 || channels == 0)
                throw std::invalid_argument("comm_account: zero dimensions");
            cost.upload = channels * L * M * d;
            cost.download = channels * (L * M * d + n_items * L);
            break;
    }
    return cost;
}

std::span<const AccountPreset> account_presets() {
    static const AccountPreset presets[] = {
        {"ml-100k", 1682, 512, 256, 3}, {"ml-1m", 3706, 512, 512, 3},
        {"steam", 5237, 512, 512, 3},   {"toys", 16454, 512, 1024, 3},
        {"book", 9332, 512, 512, 3},
    };
    return presets;
}

LoadedExperiment load_experiment(const ExperimentConfig& cfg) {
    LoadedExperiment exp;
    if (cfg.dataset == "synthetic") {
        SynthSpec spec;
        spec.n_users = cfg.synth_users;
        spec.n_items = cfg.synth_items;
        spec.avg_items_per_user = cfg.synth_avg_per_user;
        spec.n_topics = cfg.synth_topics;
        spec.latent_dim = cfg.synth_latent_dim;
        spec.d_sem = cfg.d_sem;
        spec.temperature = cfg.synth_temperature;
        spec.semantic_noise = cfg.synth_semantic_noise;
        auto [ds, sv] = make_synthetic_dataset(spec, cfg.seed);
        exp.dataset = std::move(ds);
        exp.semantic = std::move(sv);
    } else {
        exp.dataset = load_dataset(cfg.dataset, DatasetFormat::tsv_triples);
        if (cfg.semantic == "synthetic") {
            exp.semantic = synthesize_semantic_vectors(exp.dataset.n_items, cfg.d_sem, cfg.seed);
        } else {
            exp.semantic = load_semantic_vectors(cfg.semantic, exp.dataset.n_items);
        }
    }
    if (cfg.dataset == "synthetic" && cfg.semantic != "synthetic") {
        exp.semantic = load_semantic_vectors(cfg.semantic, exp.dataset.n_items);
    }

    split_dataset(exp.dataset, cfg.seed);
    partition_clients(exp.dataset, cfg.n_clients, cfg.seed);
    if (cfg.noise_ratio > 0.0)
        exp.dataset = inject_click_noise(exp.dataset, cfg.noise_ratio, cfg.seed);
    return exp;
}

namespace {

ClientConfig client_config(const ExperimentConfig& cfg) {
    ClientConfig cc;
    cc.local_epochs = cfg.local_epochs;
    cc.batch_size = cfg.batch_size;
    cc.negative_ratio = cfg.negative_ratio;
    cc.model_opt.lr = cfg.lr_model;
    cc.model_opt.weight_decay = cfg.weight_decay;
    cc.codebook_lr = cfg.lr_codebook;
    cc.codebook_steps = cfg.codebook_steps;
    cc.laplace_delta = cfg.dp_delta;
    return cc;
}

std::vector<ClientState> make_clients(const ExperimentConfig& cfg,
                                      const InteractionDataset& ds) {
    std::vector<ClientState> clients;
    clients.reserve(cfg.n_clients);
    ClientConfig cc = client_config(cfg);
    for (std::uint32_t k = 0; k < cfg.n_clients; ++k) {
        clients.emplace_back(k, ds, cfg.d, derive_seed(cfg.seed, seed_tag::kClientInit, k), cc,
                             cfg.init_std);
    }
    return clients;
}

std::vector<const MfModel*> model_set(const std::vector<ClientState>& clients) {
    std::vector<const MfModel*> models;
    models.reserve(clients.size());
    for (const ClientState& c : clients) models.push_back(&c.model());
    return models;
}

double wall_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

RunResult run_rqfedrec(const ExperimentConfig& cfg, const InteractionDataset& ds,
                       const SemanticVectors& semantic) {
    if (!ds.split_done || ds.partition.empty())
        throw std::logic_error("run_rqfedrec: dataset must be split and partitioned");
    if (semantic.values.rows() != ds.n_items)
        throw std::invalid_argument("run_rqfedrec: semantic vector row count mismatch");

    const CommCost steady = comm_account(Method::rqfedrec, ds.n_items, cfg.d, cfg.M, cfg.L, 2);
    if (steady.download >= ds.n_items * cfg.d) {
        std::fprintf(stderr,
                     "warning: codebook download (%zu params) is not smaller than an item "
                     "table (%zu params); M/L are too large for this catalog\n",
                     steady.download, ds.n_items * cfg.d);
    }

    ServerConfig sc;
    sc.M = cfg.M;
    sc.L = cfg.L;
    sc.d = cfg.d;
    sc.tau = cfg.tau;
    sc.T_warm = cfg.T_warm;
    sc.kmeans_iters = cfg.kmeans_iters;
    sc.init_std = cfg.init_std;
    ServerState server(sc, cfg.seed);
    server.bootstrap_semantic(semantic);

    std::vector<ClientState> clients = make_clients(cfg, ds);
    auto models = model_set(clients);

    // Receiving the initial broadcast replaces every local item table with
    // the decode of the freshly initialized global codebooks, so round 1
    // trains from a common base and the first uploads carry only training
    // deltas rather than each client's private random init.
    for (ClientState& c : clients) {
        c.refresh_items(server.global_semantic(), server.global_collaborative(),
                        server.lambda_for_round(1), server.semantic_codes(),
                        server.collaborative_codes());
    }

    RunResult result;
    result.reports.reserve(cfg.rounds);
    std::vector<UploadPacket> packets(clients.size());

    for (std::size_t t = 1; t <= cfg.rounds; ++t) {
        auto start = std::chrono::steady_clock::now();
        RoundReport report;
        report.round = t;
        report.lambda = server.lambda_for_round(t);

        BroadcastPayload payload = server.build_broadcast(t);
        std::size_t download_measured = measured_param_count(encode(payload));
        std::size_t id_channels = (payload.semantic_codes ? 1u : 0u) +
                                  (payload.collaborative_codes ? 1u : 0u);
        std::size_t channels = payload.collaborative ? 2u : 1u;
        std::size_t download_formula =
            channels * cfg.L * cfg.M * cfg.d + ds.n_items * cfg.L * id_channels;
        if (download_measured != download_formula)
            throw std::logic_error("run_rqfedrec: download accounting mismatch");
        report.download_params_per_client = download_measured;
        report.download_params_total = download_measured * clients.size();

        double loss_sum = 0.0;
        std::size_t loss_clients = 0;
        double distill_sum = 0.0;
        std::size_t distill_clients = 0;
        for (std::size_t k = 0; k < clients.size(); ++k) {
            ClientState& c = clients[k];
            c.receive_broadcast(payload);

            Rng neg_rng(derive_seed(cfg.seed, seed_tag::kNegatives, k, t));
            Rng shuffle_rng(derive_seed(cfg.seed, seed_tag::kTrainShuffle, k, t));
            auto losses = c.local_train(neg_rng, shuffle_rng);
            if (c.sample_weight() > 0) {
                double mean = 0.0;
                for (double l : losses) mean += l;
                loss_sum += losses.empty() ? 0.0 : mean / static_cast<double>(losses.size());
                ++loss_clients;
            }

            Rng lap_rng(derive_seed(cfg.seed, seed_tag::kLaplace, k, t));
            c.perturb_items(cfg.dp_delta, lap_rng);
            auto curve = c.train_codebooks();
            if (!c.interacted_items().empty()) {
                distill_sum += curve.back();
                ++distill_clients;
            }
            packets[k] = c.build_upload();
        }
        report.mean_local_loss = loss_clients ? loss_sum / static_cast<double>(loss_clients) : 0.0;
        report.mean_distill_loss =
            distill_clients ? distill_sum / static_cast<double>(distill_clients) : 0.0;

        std::size_t upload_measured = measured_param_count(encode(packets[0]));
        std::size_t upload_formula = channels * cfg.L * cfg.M * cfg.d;
        if (upload_measured != upload_formula)
            throw std::logic_error("run_rqfedrec: upload accounting mismatch");
        report.upload_params_per_client = upload_measured;
        report.upload_params_total = upload_measured * clients.size();

        server.aggregate(packets);
        if (t % cfg.tau == 0) {
            // One fixed seed for every refresh: k-means labels then stay
            // roughly aligned across refreshes, so the retained collaborative
            // codebook values keep pointing at the clusters they were trained
            // for instead of being reshuffled under new ids.
            server.refresh_collaborative_codes(t, derive_seed(cfg.seed, seed_tag::kCollabRq));
        }

        // Item refresh feeds round t+1's training, so it uses that round's
        // collaborative rate.
        double lambda_next = server.lambda_for_round(t + 1);
        for (ClientState& c : clients) {
            c.refresh_items(server.global_semantic(), server.global_collaborative(),
                            lambda_next, server.semantic_codes(), server.collaborative_codes());
        }

        if (t % cfg.eval_every == 0 || t == cfg.rounds) {
            report.val = evaluate(models, ds, EvalSplit::val);
            report.evaluated = true;
        }
        report.wall_seconds = wall_since(start);
        result.reports.push_back(report);
    }

    result.final_val = result.reports.back().val;
    result.final_test = evaluate(models, ds, EvalSplit::test);

    BroadcastPayload final_state = server.build_broadcast(cfg.rounds + 1);
    final_state.semantic_codes = server.semantic_codes();  // persist ids regardless of round
    result.final_state = std::move(final_state);
    return result;
}

RunResult run_baseline_fedmf(const ExperimentConfig& cfg, const InteractionDataset& ds) {
    if (!ds.split_done || ds.partition.empty())
        throw std::logic_error("run_baseline_fedmf: dataset must be split and partitioned");

    Rng init_rng(derive_seed(cfg.seed, seed_tag::kServerInit, 1));
    Matrix global_items = Matrix::gaussian(ds.n_items, cfg.d, cfg.init_std, init_rng);

    std::vector<ClientState> clients = make_clients(cfg, ds);
    auto models = model_set(clients);
    for (ClientState& c : clients) c.model().set_item_table(global_items);

    const std::size_t table_params = ds.n_items * cfg.d;
    RunResult result;
    result.reports.reserve(cfg.rounds);

    double total_weight = 0.0;
    for (const ClientState& c : clients) total_weight += static_cast<double>(c.sample_weight());
    if (total_weight <= 0.0) throw std::runtime_error("run_baseline_fedmf: no training data");

    for (std::size_t t = 1; t <= cfg.rounds; ++t) {
        auto start = std::chrono::steady_clock::now();
        RoundReport report;
        report.round = t;
        report.download_params_per_client = table_params;
        report.download_params_total = table_params * clients.size();
        report.upload_params_per_client = table_params;
        report.upload_params_total = table_params * clients.size();

        double loss_sum = 0.0;
        std::size_t loss_clients = 0;
        Matrix next_global(ds.n_items, cfg.d);
        for (std::size_t k = 0; k < clients.size(); ++k) {
            ClientState& c = clients[k];
            Rng neg_rng(derive_seed(cfg.seed, seed_tag::kNegatives, k, t));
            Rng shuffle_rng(derive_seed(cfg.seed, seed_tag::kTrainShuffle, k, t));
            auto losses = c.local_train(neg_rng, shuffle_rng);
            if (c.sample_weight() > 0) {
                double mean = 0.0;
                for (double l : losses) mean += l;
                loss_sum += losses.empty() ? 0.0 : mean / static_cast<double>(losses.size());
                ++loss_clients;
            }
            // Upload: the full item table, weighted into the global average.
            double w = static_cast<double>(c.sample_weight()) / total_weight;
            if (w > 0.0) {
                kernels::axpy(w, c.model().item_table().data(), next_global.data(),
                              next_global.size());
            }
        }
        report.mean_local_loss = loss_clients ? loss_sum / static_cast<double>(loss_clients) : 0.0;

        global_items = std::move(next_global);
        for (ClientState& c : clients) c.model().set_item_table(global_items);

        if (t % cfg.eval_every == 0 || t == cfg.rounds) {
            report.val = evaluate(models, ds, EvalSplit::val);
            report.evaluated = true;
        }
        report.wall_seconds = wall_since(start);
        result.reports.push_back(report);
    }
    result.final_val = result.reports.back().val;
    result.final_test = evaluate(models, ds, EvalSplit::test);
    return result;
}

RunResult run_baseline_local(const ExperimentConfig& cfg, const InteractionDataset& ds) {
    if (!ds.split_done || ds.partition.empty())
        throw std::logic_error("run_baseline_local: dataset must be split and partitioned");

    std::vector<ClientState> clients = make_clients(cfg, ds);
    auto models = model_set(clients);

    RunResult result;
    result.reports.reserve(cfg.rounds);
    for (std::size_t t = 1; t <= cfg.rounds; ++t) {
        auto start = std::chrono::steady_clock::now();
        RoundReport report;
        report.round = t;

        double loss_sum = 0.0;
        std::size_t loss_clients = 0;
        for (std::size_t k = 0; k < clients.size(); ++k) {
            ClientState& c = clients[k];
            Rng neg_rng(derive_seed(cfg.seed, seed_tag::kNegatives, k, t));
            Rng shuffle_rng(derive_seed(cfg.seed, seed_tag::kTrainShuffle, k, t));
            auto losses = c.local_train(neg_rng, shuffle_rng);
            if (c.sample_weight() > 0) {
                double mean = 0.0;
                for (double l : losses) mean += l;
                loss_sum += losses.empty() ? 0.0 : mean / static_cast<double>(losses.size());
                ++loss_clients;
            }
        }
        report.mean_local_loss = loss_clients ? loss_sum / static_cast<double>(loss_clients) : 0.0;

        if (t % cfg.eval_every == 0 || t == cfg.rounds) {
            report.val = evaluate(models, ds, EvalSplit::val);
            report.evaluated = true;
        }
        report.wall_seconds = wall_since(start);
        result.reports.push_back(report);
    }
    result.final_val = result.reports.back().val;
    result.final_test = evaluate(models, ds, EvalSplit::test);
    return result;
}

RunResult run_method(const ExperimentConfig& cfg, const LoadedExperiment& exp) {
    switch (method_from_string(cfg.method)) {
        case Method::rqfedrec: return run_rqfedrec(cfg, exp.dataset, exp.semantic);
        case Method::fedmf: return run_baseline_fedmf(cfg, exp.dataset);
        case Method::local: return run_baseline_local(cfg, exp.dataset);
    }
    throw std::logic_error("run_method: unreachable");
}

TheoryTrial verify_theorem1(double sigma2, std::size_t n_i, std::size_t n_c,
                            std::size_t trials, std::size_t dim, std::uint64_t seed) {
    if (n_i < 1 || n_c < n_i)
        throw std::invalid_argument("verify_theorem1: need n_c >= n_i >= 1");
    if (trials == 0 || dim == 0)
        throw std::invalid_argument("verify_theorem1: trials and dim must be positive");

    TheoryTrial out;
    out.sigma2 = sigma2;
    out.n_i = n_i;
    out.n_c = n_c;
    out.trials = trials;
    out.dim = dim;

    Rng rng(seed);
    const double coord_std = std::sqrt(sigma2 / static_cast<double>(dim));
    std::vector<double> noise(dim), id_avg(dim), code_avg(dim);
    double id_sum = 0.0, code_sum = 0.0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        std::fill(id_avg.begin(), id_avg.end(), 0.0);
        std::fill(code_avg.begin(), code_avg.end(), 0.0);
        // The clients contributing item i are a subset of those contributing
        // its code id, so the two averages share the first n_i draws.
        for (std::size_t k = 0; k < n_c; ++k) {
            for (double& x : noise) x = rng.gaussian(0.0, coord_std);
            if (k < n_i)
                kernels::axpy(1.0 / static_cast<double>(n_i), noise.data(), id_avg.data(), dim);
            kernels::axpy(1.0 / static_cast<double>(n_c), noise.data(), code_avg.data(), dim);
        }
        id_sum += kernels::sum_sq(id_avg.data(), dim);
        code_sum += kernels::sum_sq(code_avg.data(), dim);
    }
    out.id_energy = id_sum / static_cast<double>(trials);
    out.code_energy = code_sum / static_cast<double>(trials);
    return out;
}

TheoryTrial verify_multilevel_bound(double sigma2, std::span<const std::size_t> level_counts,
                                    std::size_t trials, std::size_t dim, std::uint64_t seed) {
    if (level_counts.empty())
        throw std::invalid_argument("verify_multilevel_bound: need at least one level");
    for (std::size_t n : level_counts)
        if (n < 1) throw std::invalid_argument("verify_multilevel_bound: counts must be >= 1");
    if (trials == 0 || dim == 0)
        throw std::invalid_argument("verify_multilevel_bound: trials and dim must be positive");

    TheoryTrial out;
    out.sigma2 = sigma2;
    out.level_counts.assign(level_counts.begin(), level_counts.end());
    out.trials = trials;
    out.dim = dim;

    double inv_sum = 0.0;
    for (std::size_t n : level_counts) inv_sum += 1.0 / static_cast<double>(n);
    out.bound = sigma2 * inv_sum;
    out.n_eff = 1.0 / inv_sum;

    Rng rng(seed);
    const double coord_std = std::sqrt(sigma2 / static_cast<double>(dim));
    std::vector<double> noise(dim), total(dim);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        std::fill(total.begin(), total.end(), 0.0);
        for (std::size_t n : level_counts) {
            for (std::size_t k = 0; k < n; ++k) {
                for (double& x : noise) x = rng.gaussian(0.0, coord_std);
                kernels::axpy(1.0 / static_cast<double>(n), noise.data(), total.data(), dim);
            }
        }
        double e = kernels::sum_sq(total.data(), dim);
        sum += e;
        sum_sq += e * e;
    }
    double mean = sum / static_cast<double>(trials);
    double var = sum_sq / static_cast<double>(trials) - mean * mean;
    out.multi_energy = mean;
    out.multi_stderr = std::sqrt(std::max(var, 0.0) / static_cast<double>(trials));
    return out;
}

std::vector<SweepRow> run_noise_robustness(const ExperimentConfig& cfg,
                                           std::span<const double> ratios) {
    ExperimentConfig clean = cfg;
    clean.noise_ratio = 0.0;
    LoadedExperiment base = load_experiment(clean);

    std::vector<SweepRow> rows;
    for (double ratio : ratios) {
        if (ratio < 0.0 || ratio > 1.0)
            throw std::invalid_argument("run_noise_robustness: ratio out of [0,1]");
        LoadedExperiment noisy;
        noisy.semantic = base.semantic;
        noisy.dataset = ratio > 0.0 ? inject_click_noise(base.dataset, ratio, cfg.seed)
                                    : base.dataset;

        RunResult rq = run_rqfedrec(cfg, noisy.dataset, noisy.semantic);
        rows.push_back({ratio, Method::rqfedrec, rq.final_test});
        RunResult fm = run_baseline_fedmf(cfg, noisy.dataset);
        rows.push_back({ratio, Method::fedmf, fm.final_test});
    }
    return rows;
}

std::vector<SweepRow> run_dp_sweep(const ExperimentConfig& cfg, std::span<const double> deltas) {
    ExperimentConfig base_cfg = cfg;
    base_cfg.noise_ratio = 0.0;
    LoadedExperiment base = load_experiment(base_cfg);

    std::vector<SweepRow> rows;
    for (double delta : deltas) {
        if (delta < 0.0) throw std::invalid_argument("run_dp_sweep: delta must be >= 0");
        ExperimentConfig run_cfg = base_cfg;
        run_cfg.dp_delta = delta;
        RunResult rq = run_rqfedrec(run_cfg, base.dataset, base.semantic);
        rows.push_back({delta, Method::rqfedrec, rq.final_test});
    }
    return rows;
}

std::string reports_to_csv(const std::vector<RoundReport>& reports) {
    std::ostringstream out;
    out << "round,lambda,mean_local_loss,mean_distill_loss,upload_params_per_client,"
           "upload_params_total,download_params_per_client,download_params_total,"
           "val_recall10,val_mrr10,val_ndcg10\n";
    char buf[64];
    auto g = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const RoundReport& r : reports) {
        out << r.round << ',' << g(r.lambda) << ',' << g(r.mean_local_loss) << ','
            << g(r.mean_distill_loss) << ',' << r.upload_params_per_client << ','
            << r.upload_params_total << ',' << r.download_params_per_client << ','
            << r.download_params_total << ',';
        if (r.evaluated)
            out << g(r.val.recall) << ',' << g(r.val.mrr) << ',' << g(r.val.ndcg);
        else
            out << ",,";
        out << '\n';
    }
    return out.str();
}

std::string sweep_to_csv(std::span<const SweepRow> rows, const std::string& knob_name) {
    std::ostringstream out;
    out << knob_name << ",method,test_recall10,test_mrr10,test_ndcg10\n";
    char buf[64];
    auto g = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const SweepRow& r : rows) {
        out << g(r.knob) << ',' << to_string(r.method) << ',' << g(r.test.recall) << ','
            << g(r.test.mrr) << ',' << g(r.test.ndcg) << '\n';
    }
    return out.str();
}

}  // namespace rqfedrec
