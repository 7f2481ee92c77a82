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
#include "rqfedrec/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace rqfedrec {

std::string to_string(Method m) {
    switch (m) {
        case Method::rqfedrec: return "rqfedrec";
        case Method::fedmf: return "fedmf";
        case Method::local: return "local";
    }
    return "rqfedrec";
}

Method method_from_string(const std::string& s) {
    if (s == "rqfedrec") return Method::rqfedrec;
    if (s == "fedmf") return Method::fedmf;
    if (s == "local") return Method::local;
    throw std::invalid_argument("method: expected rqfedrec|fedmf|local, got '" + s + "'");
}

namespace {

struct Field {
    const char* key;
    std::function<void(ExperimentConfig&, const std::string&)> parse;
    std::function<std::string(const ExperimentConfig&)> render;
};

std::string render_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    T out{};
    if (!(in >> out) || !(in >> std::ws).eof())
        throw std::invalid_argument(key + ": expected a number, got '" + value + "'");
    return out;
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        auto str = [&f](const char* key, std::string ExperimentConfig::* member) {
            f.push_back({key,
                         [member](ExperimentConfig& c, const std::string& v) { c.*member = v; },
                         [member](const ExperimentConfig& c) { return c.*member; }});
        };
        auto num = [&f](const char* key, auto ExperimentConfig::* member) {
            using T = std::remove_reference_t<decltype(std::declval<ExperimentConfig>().*member)>;
            f.push_back({key,
                         [member, key](ExperimentConfig& c, const std::string& v) {
                             c.*member = parse_number<T>(key, v);
                         },
                         [member](const ExperimentConfig& c) {
                             if constexpr (std::is_floating_point_v<T>)
                                 return render_double(c.*member);
                             else
                                 return std::to_string(c.*member);
                         }});
        };
        str("dataset", &ExperimentConfig::dataset);
        str("semantic", &ExperimentConfig::semantic);
        str("method", &ExperimentConfig::method);
        str("output_dir", &ExperimentConfig::output_dir);
        num("seed", &ExperimentConfig::seed);
        num("n_clients", &ExperimentConfig::n_clients);
        num("d", &ExperimentConfig::d);
        num("M", &ExperimentConfig::M);
        num("L", &ExperimentConfig::L);
        num("tau", &ExperimentConfig::tau);
        num("T_warm", &ExperimentConfig::T_warm);
        num("rounds", &ExperimentConfig::rounds);
        num("local_epochs", &ExperimentConfig::local_epochs);
        num("negative_ratio", &ExperimentConfig::negative_ratio);
        num("batch_size", &ExperimentConfig::batch_size);
        num("codebook_steps", &ExperimentConfig::codebook_steps);
        num("eval_every", &ExperimentConfig::eval_every);
        num("kmeans_iters", &ExperimentConfig::kmeans_iters);
        num("lr_model", &ExperimentConfig::lr_model);
        num("lr_codebook", &ExperimentConfig::lr_codebook);
        num("weight_decay", &ExperimentConfig::weight_decay);
        num("dp_delta", &ExperimentConfig::dp_delta);
        num("noise_ratio", &ExperimentConfig::noise_ratio);
        num("init_std", &ExperimentConfig::init_std);
        num("synth_users", &ExperimentConfig::synth_users);
        num("synth_items", &ExperimentConfig::synth_items);
        num("synth_avg_per_user", &ExperimentConfig::synth_avg_per_user);
        num("synth_topics", &ExperimentConfig::synth_topics);
        num("synth_latent_dim", &ExperimentConfig::synth_latent_dim);
        num("d_sem", &ExperimentConfig::d_sem);
        num("synth_temperature", &ExperimentConfig::synth_temperature);
        num("synth_semantic_noise", &ExperimentConfig::synth_semantic_noise);
        return f;
    }();
    return table;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

void apply_config_override(ExperimentConfig& cfg, const std::string& key,
                           const std::string& value) {
    for (const Field& f : fields()) {
        if (key == f.key) {
            f.parse(cfg, value);
            return;
        }
    }
    throw std::invalid_argument("unknown config key '" + key + "'");
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        apply_config_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string render_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    for (const Field& f : fields()) out << f.key << " = " << f.render(cfg) << '\n';
    return out.str();
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
    std::vector<std::string> errors;
    auto positive = [&](std::size_t v, const char* name) {
        if (v == 0) errors.push_back(std::string(name) + ": must be positive");
    };
    positive(cfg.n_clients, "n_clients");
    positive(cfg.d, "d");
    positive(cfg.M, "M");
    positive(cfg.L, "L");
    positive(cfg.tau, "tau");
    positive(cfg.T_warm, "T_warm");
    positive(cfg.rounds, "rounds");
    positive(cfg.batch_size, "batch_size");
    positive(cfg.eval_every, "eval_every");
    positive(cfg.kmeans_iters, "kmeans_iters");
    if (cfg.dataset.empty()) errors.push_back("dataset: must be a path or 'synthetic'");
    if (cfg.semantic.empty()) errors.push_back("semantic: must be a path or 'synthetic'");
    try {
        method_from_string(cfg.method);
    } catch (const std::exception& e) {
        errors.push_back(e.what());
    }
    if (cfg.dp_delta < 0.0) errors.push_back("dp_delta: must be >= 0");
    if (cfg.noise_ratio < 0.0 || cfg.noise_ratio > 1.0)
        errors.push_back("noise_ratio: must be in [0,1]");
    if (cfg.lr_model <= 0.0) errors.push_back("lr_model: must be > 0");
    if (cfg.lr_codebook <= 0.0) errors.push_back("lr_codebook: must be > 0");
    if (cfg.weight_decay < 0.0) errors.push_back("weight_decay: must be >= 0");
    if (cfg.dataset == "synthetic") {
        positive(cfg.synth_users, "synth_users");
        positive(cfg.synth_items, "synth_items");
        positive(cfg.synth_avg_per_user, "synth_avg_per_user");
        positive(cfg.synth_topics, "synth_topics");
        positive(cfg.synth_latent_dim, "synth_latent_dim");
        positive(cfg.d_sem, "d_sem");
    }
    return errors;
}

}  // namespace rqfedrec
