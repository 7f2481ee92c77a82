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

// Experiment driver. Subcommands: run, account, verify-theory, noise-sweep,
// dp-sweep. Exit codes: 0 ok, 1 config error, 2 runtime error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rqfedrec/config.hpp"
#include "rqfedrec/kernels.hpp"
#include "rqfedrec/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitRuntimeError = 2;

struct ConfigArgs {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
    cmd->add_option("--config", args.config_path, "key=value config file");
    cmd->add_option("--set", args.overrides, "override a config key (key=value, repeatable)");
}

rqfedrec::ExperimentConfig resolve_config(const ConfigArgs& args) {
    rqfedrec::ExperimentConfig cfg;
    if (!args.config_path.empty()) cfg = rqfedrec::parse_config_file(args.config_path);
    for (const std::string& kv : args.overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        rqfedrec::apply_config_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    auto errors = rqfedrec::validate_config(cfg);
    if (!errors.empty()) {
        for (const std::string& e : errors) std::cerr << "config error: " << e << '\n';
        throw CLI::ValidationError("config", "invalid configuration");
    }
    return cfg;
}

fs::path resolve_output_dir(const rqfedrec::ExperimentConfig& cfg) {
    fs::path dir = cfg.output_dir;
    if (dir.is_relative()) {
        if (const char* root = std::getenv("RQFEDREC_OUT_ROOT")) dir = fs::path(root) / dir;
    }
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

void write_codes_csv(const fs::path& path, const rqfedrec::CodeAssignment& codes) {
    std::ostringstream out;
    for (std::size_t i = 0; i < codes.n_items; ++i) {
        auto row = codes.row(i);
        for (std::size_t l = 0; l < row.size(); ++l) out << (l ? "," : "") << row[l];
        out << '\n';
    }
    write_file(path, out.str());
}

json metrics_json(const rqfedrec::RankingMetrics& m) {
    return json{{"recall10", m.recall},
                {"mrr10", m.mrr},
                {"ndcg10", m.ndcg},
                {"users_evaluated", m.users_evaluated},
                {"users_skipped", m.users_skipped}};
}

int cmd_run(const ConfigArgs& args) {
    rqfedrec::ExperimentConfig cfg = resolve_config(args);
    fs::path out_dir = resolve_output_dir(cfg);
    write_file(out_dir / "resolved_config.txt", rqfedrec::render_config(cfg));

    rqfedrec::LoadedExperiment exp = rqfedrec::load_experiment(cfg);
    rqfedrec::RunResult result = rqfedrec::run_method(cfg, exp);

    write_file(out_dir / "reports.csv", rqfedrec::reports_to_csv(result.reports));

    json summary;
    summary["method"] = cfg.method;
    summary["seed"] = cfg.seed;
    summary["rounds"] = result.reports.size();
    summary["n_users"] = exp.dataset.n_users;
    summary["n_items"] = exp.dataset.n_items;
    summary["final_val"] = metrics_json(result.final_val);
    summary["final_test"] = metrics_json(result.final_test);
    std::size_t upload_total = 0, download_total = 0;
    double wall_total = 0.0;
    json walls = json::array();
    for (const auto& r : result.reports) {
        upload_total += r.upload_params_total;
        download_total += r.download_params_total;
        wall_total += r.wall_seconds;
        walls.push_back(r.wall_seconds);
    }
    summary["upload_params_total"] = upload_total;
    summary["download_params_total"] = download_total;
    summary["wall_seconds_total"] = wall_total;
    summary["wall_seconds_per_round"] = walls;
    summary["kernels"] = rqfedrec::kernels::active().name;
    write_file(out_dir / "summary.json", summary.dump(2) + "\n");

    if (result.final_state) {
        auto bytes = rqfedrec::encode(*result.final_state);
        std::ofstream bin(out_dir / "codebooks.bin", std::ios::binary);
        bin.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (result.final_state->semantic_codes)
            write_codes_csv(out_dir / "semantic_codes.csv", *result.final_state->semantic_codes);
        if (result.final_state->collaborative_codes)
            write_codes_csv(out_dir / "collaborative_codes.csv",
                            *result.final_state->collaborative_codes);
    }

    std::printf("method=%s rounds=%zu test recall@10=%.4f mrr@10=%.4f ndcg@10=%.4f\n",
                cfg.method.c_str(), result.reports.size(), result.final_test.recall,
                result.final_test.mrr, result.final_test.ndcg);
    std::printf("outputs written to %s\n", out_dir.string().c_str());
    return kExitOk;
}

void print_account_rows(const std::string& name, std::size_t n_items, std::size_t d,
                        std::size_t M, std::size_t L) {
    auto fedmf = rqfedrec::comm_account(rqfedrec::Method::fedmf, n_items, d, M, L, 2);
    auto ours = rqfedrec::comm_account(rqfedrec::Method::rqfedrec, n_items, d, M, L, 2);
    // Resource = the per-round per-client download (the larger direction for
    // the codebook method; up and down coincide for FedMF). Percentages are
    // truncated toward zero, matching the published accounting convention.
    auto pct = static_cast<long long>(100.0 * static_cast<double>(ours.download) /
                                      static_cast<double>(fedmf.download));
    std::printf("%-10s %-9s d=%zu n_i=%zu%*s %12zu %11s\n", name.c_str(), "fedmf", d, n_items,
                6, "", fedmf.download, "100%");
    std::printf("%-10s %-9s d=%zu M=%zu L=%zu%*s %12zu %10lld%%\n", name.c_str(), "rqfedrec", d,
                M, L, 4, "", ours.download, pct);
    std::printf("%-10s %-9s upload=%zu download=%zu\n", name.c_str(), "(detail)", ours.upload,
                ours.download);
}

int cmd_account(const std::string& preset, std::size_t n_items, std::size_t d, std::size_t M,
                std::size_t L) {
    std::printf("%-10s %-9s %-24s %12s %11s\n", "dataset", "method", "parameters", "resource",
                "percentage");
    if (!preset.empty()) {
        bool found = false;
        for (const auto& p : rqfedrec::account_presets()) {
            if (preset == "all" || preset == p.name) {
                print_account_rows(p.name, p.n_items, p.d, p.M, p.L);
                found = true;
            }
        }
        if (!found) throw CLI::ValidationError("--preset", "unknown preset '" + preset + "'");
        return kExitOk;
    }
    if (n_items == 0 || d == 0 || M == 0 || L == 0)
        throw CLI::ValidationError("account", "provide --preset or all of --n-items --d --M --L");
    print_account_rows("custom", n_items, d, M, L);
    return kExitOk;
}

int cmd_verify_theory(double sigma2, std::size_t n_i, std::size_t n_c,
                      const std::string& levels_csv, std::size_t trials, std::size_t dim,
                      std::uint64_t seed, double tolerance) {
    bool all_pass = true;
    auto report = [&](const char* what, double got, double want) {
        double rel = want != 0.0 ? std::fabs(got - want) / std::fabs(want) : std::fabs(got);
        bool pass = rel <= tolerance;
        all_pass = all_pass && pass;
        std::printf("  %-12s %12.6f expected %12.6f rel_err %6.2f%% %s\n", what, got, want,
                    100.0 * rel, pass ? "PASS" : "FAIL");
    };

    auto t1 = rqfedrec::verify_theorem1(sigma2, n_i, n_c, trials, dim, seed);
    std::printf("theorem1: sigma2=%g n_i=%zu n_c=%zu trials=%zu dim=%zu\n", sigma2, n_i, n_c,
                trials, dim);
    report("id_energy", t1.id_energy, sigma2 / static_cast<double>(n_i));
    report("code_energy", t1.code_energy, sigma2 / static_cast<double>(n_c));
    bool order = t1.code_energy <= t1.id_energy;
    all_pass = all_pass && order;
    std::printf("  %-12s %s\n", "code<=id", order ? "PASS" : "FAIL");

    if (!levels_csv.empty()) {
        std::vector<std::size_t> levels;
        std::stringstream ss(levels_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) levels.push_back(std::stoull(tok));
        auto t2 = rqfedrec::verify_multilevel_bound(sigma2, levels, trials, dim, seed + 1);
        std::printf("eq12: levels=[%s] bound=%g n_eff=%g\n", levels_csv.c_str(), t2.bound,
                    t2.n_eff);
        report("multi_energy", t2.multi_energy, t2.bound);
        bool below = t2.multi_energy <= t2.bound + 3.0 * t2.multi_stderr;
        all_pass = all_pass && below;
        std::printf("  %-12s %s (3-sigma slack %g)\n", "within bound", below ? "PASS" : "FAIL",
                    3.0 * t2.multi_stderr);
    }
    std::printf("overall: %s\n", all_pass ? "PASS" : "FAIL");
    return all_pass ? kExitOk : kExitRuntimeError;
}

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

int cmd_sweep(const ConfigArgs& args, const std::string& grid_csv, bool dp) {
    rqfedrec::ExperimentConfig cfg = resolve_config(args);
    fs::path out_dir = resolve_output_dir(cfg);
    write_file(out_dir / "resolved_config.txt", rqfedrec::render_config(cfg));

    std::vector<double> grid = parse_grid(grid_csv);
    std::vector<rqfedrec::SweepRow> rows =
        dp ? rqfedrec::run_dp_sweep(cfg, grid) : rqfedrec::run_noise_robustness(cfg, grid);
    std::string knob = dp ? "dp_delta" : "noise_ratio";
    std::string csv = rqfedrec::sweep_to_csv(rows, knob);
    write_file(out_dir / (knob + "_sweep.csv"), csv);
    std::fputs(csv.c_str(), stdout);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RQFedRec: feature-indexed federated recommendation simulator"};
    app.require_subcommand(1);

    ConfigArgs run_args;
    CLI::App* run = app.add_subcommand("run", "run one experiment end to end");
    add_config_options(run, run_args);

    std::string preset;
    std::size_t n_items = 0, d = 0, M = 0, L = 0;
    CLI::App* account = app.add_subcommand("account", "print communication accounting");
    account->add_option("--preset", preset, "dataset preset name or 'all'");
    account->add_option("--n-items", n_items, "catalog size");
    account->add_option("--d", d, "embedding dimension");
    account->add_option("--M", M, "codebook size");
    account->add_option("--L", L, "quantization levels");

    double sigma2 = 1.0, tolerance = 0.10;
    std::size_t t_ni = 4, t_nc = 16, trials = 10000, dim = 32;
    std::uint64_t t_seed = 7;
    std::string levels_csv;
    CLI::App* verify = app.add_subcommand("verify-theory", "Monte-Carlo noise-theory checks");
    verify->add_option("--sigma2", sigma2, "per-client noise energy");
    verify->add_option("--n-i", t_ni, "id-path contributor count");
    verify->add_option("--n-c", t_nc, "code-path contributor count");
    verify->add_option("--levels", levels_csv, "per-level contributor counts, e.g. 2,2,2");
    verify->add_option("--trials", trials, "Monte-Carlo trials");
    verify->add_option("--dim", dim, "noise dimension");
    verify->add_option("--seed", t_seed, "rng seed");
    verify->add_option("--tolerance", tolerance, "relative tolerance");

    ConfigArgs noise_args;
    std::string ratios_csv = "0,0.05,0.1,0.15";
    CLI::App* noise = app.add_subcommand("noise-sweep", "click-noise robustness table");
    add_config_options(noise, noise_args);
    noise->add_option("--ratios", ratios_csv, "comma-separated noise ratios");

    ConfigArgs dp_args;
    std::string deltas_csv = "0,0.02,0.04,0.06,0.08";
    CLI::App* dp = app.add_subcommand("dp-sweep", "LDP noise-scale sweep");
    add_config_options(dp, dp_args);
    dp->add_option("--deltas", deltas_csv, "comma-separated Laplace scales");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (account->parsed()) return cmd_account(preset, n_items, d, M, L);
        if (verify->parsed())
            return cmd_verify_theory(sigma2, t_ni, t_nc, levels_csv, trials, dim, t_seed,
                                     tolerance);
        if (noise->parsed()) return cmd_sweep(noise_args, ratios_csv, false);
        if (dp->parsed()) return cmd_sweep(dp_args, deltas_csv, true);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntimeError;
    }
    return kExitConfigError;
}
