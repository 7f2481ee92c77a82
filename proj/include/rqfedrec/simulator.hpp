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
#include <string>
#include <vector>

#include "rqfedrec/client.hpp"
#include "rqfedrec/config.hpp"
#include "rqfedrec/metrics.hpp"
#include "rqfedrec/server.hpp"

namespace rqfedrec {

struct RoundReport {
    std::size_t round = 0;
    double lambda = 0.0;
    double mean_local_loss = 0.0;
    double mean_distill_loss = 0.0;
    std::size_t upload_params_per_client = 0;
    std::size_t upload_params_total = 0;
    std::size_t download_params_per_client = 0;
    std::size_t download_params_total = 0;
    bool evaluated = false;
    RankingMetrics val;
    double wall_seconds = 0.0;  // goes to the JSON summary, never the CSV
};

struct RunResult {
    std::vector<RoundReport> reports;
    RankingMetrics final_val;
    RankingMetrics final_test;
    // Final global codebooks/code ids (rqfedrec runs only), for persistence.
    std::optional<BroadcastPayload> final_state;
};

struct CommCost {
    std::size_t upload = 0;
    std::size_t download = 0;
};

// Per-round per-client parameter counts. rqfedrec: channels*L*M*d up,
// channels*(L*M*d + n_items*L) down. fedmf: n_items*d both ways.
CommCost comm_account(Method method, std::size_t n_items, std::size_t d, std::size_t M,
                      std::size_t L, std::size_t channels);

// The (d, M, L, n_items) configurations of the five public datasets the
// accounting table covers.
struct AccountPreset {
    const char* name;
    std::size_t n_items;
    std::size_t d;
    std::size_t M;
    std::size_t L;
};
std::span<const AccountPreset> account_presets();

// Dataset + semantic vectors resolved from the config (file or synthetic),
// split, partitioned, and click-noised per the config.
struct LoadedExperiment {
    InteractionDataset dataset;
    SemanticVectors semantic;
};
LoadedExperiment load_experiment(const ExperimentConfig& cfg);

RunResult run_rqfedrec(const ExperimentConfig& cfg, const InteractionDataset& ds,
                       const SemanticVectors& semantic);
RunResult run_baseline_fedmf(const ExperimentConfig& cfg, const InteractionDataset& ds);
RunResult run_baseline_local(const ExperimentConfig& cfg, const InteractionDataset& ds);
RunResult run_method(const ExperimentConfig& cfg, const LoadedExperiment& exp);

// Monte-Carlo check of the aggregation-noise theory. Per-client noise is
// Gaussian with total energy sigma2 (coordinate variance sigma2/dim). The
// id path averages the first n_i contributors, the code path all n_c, with
// shared draws, so n_c == n_i gives identical energies.
struct TheoryTrial {
    double sigma2 = 1.0;
    std::size_t n_i = 1;
    std::size_t n_c = 1;
    std::vector<std::size_t> level_counts;
    std::size_t trials = 0;
    std::size_t dim = 0;
    double id_energy = 0.0;
    double code_energy = 0.0;
    double multi_energy = 0.0;
    double multi_stderr = 0.0;
    double bound = 0.0;  // sigma2 * sum_l 1/n_l
    double n_eff = 0.0;  // (sum_l 1/n_l)^-1
};
TheoryTrial verify_theorem1(double sigma2, std::size_t n_i, std::size_t n_c,
                            std::size_t trials, std::size_t dim, std::uint64_t seed);
TheoryTrial verify_multilevel_bound(double sigma2, std::span<const std::size_t> level_counts,
                                    std::size_t trials, std::size_t dim, std::uint64_t seed);

struct SweepRow {
    double knob = 0.0;
    Method method = Method::rqfedrec;
    RankingMetrics test;
};
// Click-noise robustness: rqfedrec vs fedmf at each ratio.
std::vector<SweepRow> run_noise_robustness(const ExperimentConfig& cfg,
                                           std::span<const double> ratios);
// LDP sweep: rqfedrec across the delta grid.
std::vector<SweepRow> run_dp_sweep(const ExperimentConfig& cfg, std::span<const double> deltas);

std::string reports_to_csv(const std::vector<RoundReport>& reports);
std::string sweep_to_csv(std::span<const SweepRow> rows, const std::string& knob_name);

}  // namespace rqfedrec
