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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <string>

#include "doctest.h"
#include "rqfedrec/data.hpp"

using namespace rqfedrec;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = std::string("/tmp/rqfedrec_test_") + name;
    std::ofstream out(path);
    out << content;
    return path;
}

InteractionDataset small_split_dataset(std::uint64_t seed = 1) {
    // 4 users x 10 items each over a 20-item catalog.
    InteractionDataset ds;
    ds.n_users = 4;
    ds.n_items = 20;
    for (std::uint32_t u = 0; u < 4; ++u)
        for (std::uint32_t i = 0; i < 10; ++i) ds.train.push_back({u, (u + i * 2) % 20, 1.0f});
    split_dataset(ds, seed);
    return ds;
}

using Pair = std::pair<std::uint32_t, std::uint32_t>;
std::set<Pair> pair_set(const std::vector<Interaction>& v) {
    std::set<Pair> s;
    for (const auto& it : v) s.insert({it.user, it.item});
    return s;
}

}  // namespace

TEST_CASE("load_dataset counts users, items, interactions") {
    auto path = write_temp("tiny.tsv", "alice\tmovie1\t5\nbob\tmovie2\t3\nalice\tmovie2\t1\n");
    auto ds = load_dataset(path, DatasetFormat::tsv_triples);
    CHECK(ds.n_users == 2);
    CHECK(ds.n_items == 2);
    CHECK(ds.train.size() == 3);
    for (const auto& it : ds.train) CHECK(it.label == 1.0f);
    // Dense ids in first-appearance order.
    CHECK(ds.user_tokens[0] == "alice");
    CHECK(ds.item_tokens[1] == "movie2");
}

TEST_CASE("load_dataset ignores extra columns and blank lines") {
    auto path = write_temp("extra.tsv", "1\t10\t3\t881250949\n\n2\t20\t4\t881250950\n");
    auto ds = load_dataset(path, DatasetFormat::tsv_triples);
    CHECK(ds.train.size() == 2);
}

TEST_CASE("load_dataset reports the malformed line number") {
    std::string content;
    for (int i = 1; i <= 6; ++i)
        content += std::to_string(i) + "\t" + std::to_string(i) + "\t1\n";
    content += "7 only_two\n";
    auto path = write_temp("bad.tsv", content);
    CHECK_THROWS_WITH_AS(load_dataset(path, DatasetFormat::tsv_triples),
                         doctest::Contains("line 7"), std::runtime_error);
}

TEST_CASE("load_dataset rejects empty files") {
    auto path = write_temp("empty.tsv", "");
    CHECK_THROWS_AS(load_dataset(path, DatasetFormat::tsv_triples), std::runtime_error);
}

TEST_CASE("split ratios: 10 interactions -> 8 pool / 2 test / ~1 val") {
    InteractionDataset ds;
    ds.n_users = 1;
    ds.n_items = 10;
    for (std::uint32_t i = 0; i < 10; ++i) ds.train.push_back({0, i, 1.0f});
    split_dataset(ds, 3);
    CHECK(ds.test.size() == 2);
    CHECK(ds.val.size() == 1);
    CHECK(ds.train.size() == 7);
}

TEST_CASE("split is deterministic and disjoint") {
    auto a = small_split_dataset(9);
    auto b = small_split_dataset(9);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);

    auto train = pair_set(a.train), val = pair_set(a.val), test = pair_set(a.test);
    for (const auto& p : val) CHECK(train.count(p) == 0);
    for (const auto& p : test) {
        CHECK(train.count(p) == 0);
        CHECK(val.count(p) == 0);
    }
    CHECK(train.size() + val.size() + test.size() == 40);
}

TEST_CASE("every user keeps at least one train interaction") {
    auto ds = small_split_dataset();
    for (std::uint32_t u = 0; u < ds.n_users; ++u)
        CHECK(ds.train_items_by_user[u].size() >= 1);
}

TEST_CASE("partition: round-robin sizes and totality") {
    auto ds = small_split_dataset();
    partition_clients(ds, 3, 5);
    REQUIRE(ds.partition.size() == 3);
    std::set<std::uint32_t> seen;
    for (const auto& group : ds.partition) {
        CHECK(group.size() >= 1);
        for (auto u : group) CHECK(seen.insert(u).second);
    }
    CHECK(seen.size() == ds.n_users);

    // Degenerate single client owns everyone.
    auto ds1 = small_split_dataset();
    partition_clients(ds1, 1, 5);
    CHECK(ds1.partition[0].size() == ds1.n_users);

    auto ds2 = small_split_dataset();
    CHECK_THROWS_AS(partition_clients(ds2, 99, 5), std::invalid_argument);
}

TEST_CASE("943 users over 100 clients gives sizes in {9,10}") {
    InteractionDataset ds;
    ds.n_users = 943;
    ds.n_items = 2;
    for (std::uint32_t u = 0; u < 943; ++u) {
        ds.train.push_back({u, 0, 1.0f});
        ds.train.push_back({u, 1, 1.0f});
    }
    split_dataset(ds, 1);
    partition_clients(ds, 100, 1);
    std::size_t total = 0;
    for (const auto& group : ds.partition) {
        CHECK(group.size() >= 9);
        CHECK(group.size() <= 10);
        total += group.size();
    }
    CHECK(total == 943);
}

TEST_CASE("semantic vectors: save/load round trip and error paths") {
    SemanticVectors sv = synthesize_semantic_vectors(6, 3, 42);
    CHECK(sv.values.rows() == 6);
    CHECK(sv.values.cols() == 3);
    auto again = synthesize_semantic_vectors(6, 3, 42);
    CHECK(sv.values == again.values);

    auto path = std::string("/tmp/rqfedrec_test_sem.txt");
    save_semantic_vectors(path, sv);
    auto loaded = load_semantic_vectors(path, 6);
    CHECK(loaded.values == sv.values);

    CHECK_THROWS_AS(load_semantic_vectors(path, 7), std::runtime_error);

    auto bad = write_temp("sem_nan.txt", "1 2\nnan 0.5\n");
    CHECK_THROWS_AS(load_semantic_vectors(bad, 1), std::runtime_error);
}

TEST_CASE("negative sampling avoids train positives and honors the ratio") {
    auto ds = small_split_dataset();
    partition_clients(ds, 2, 7);
    Rng rng(3);
    auto negatives = sample_negatives(ds, 0, 4, rng);

    std::size_t positives = 0;
    for (auto u : ds.partition[0]) positives += ds.train_items_by_user[u].size();
    CHECK(negatives.size() == positives * 4);
    for (const auto& neg : negatives) {
        CHECK(neg.label == 0.0f);
        CHECK_FALSE(ds.user_has_train_item(neg.user, neg.item));
    }

    Rng rng2(3);
    auto again = sample_negatives(ds, 0, 4, rng2);
    CHECK(negatives == again);
}

TEST_CASE("click noise adds the right count of novel positives") {
    auto ds = small_split_dataset();

    auto same = inject_click_noise(ds, 0.0, 11);
    CHECK(same.train == ds.train);

    auto noisy = inject_click_noise(ds, 0.10, 11);
    std::size_t expected = (ds.train.size() + 9) / 10;  // ceil(0.1 * |train|)
    CHECK(noisy.train.size() == ds.train.size() + expected);

    auto original = pair_set(ds.train);
    for (std::size_t i = ds.train.size(); i < noisy.train.size(); ++i) {
        const auto& it = noisy.train[i];
        CHECK(it.label == 1.0f);
        CHECK(original.count({it.user, it.item}) == 0);
    }
    // val/test untouched
    CHECK(noisy.val == ds.val);
    CHECK(noisy.test == ds.test);
}

TEST_CASE("synthetic dataset is reproducible and well-formed") {
    SynthSpec spec;
    spec.n_users = 40;
    spec.n_items = 60;
    spec.avg_items_per_user = 8;
    auto [ds, sv] = make_synthetic_dataset(spec, 99);
    auto [ds2, sv2] = make_synthetic_dataset(spec, 99);
    CHECK(ds.train == ds2.train);
    CHECK(sv.values == sv2.values);
    CHECK(ds.n_users == 40);
    CHECK(ds.n_items == 60);
    CHECK(sv.values.rows() == 60);
    CHECK(sv.values.all_finite());
    for (const auto& it : ds.train) {
        CHECK(it.user < 40);
        CHECK(it.item < 60);
    }
}

TEST_CASE("ml-100k statistics when the raw file is available") {
    const char* path = std::getenv("RQFEDREC_ML100K");
    if (!path) {
        MESSAGE("RQFEDREC_ML100K not set; skipping raw-file check");
        return;
    }
    auto ds = load_dataset(path, DatasetFormat::tsv_triples);
    CHECK(ds.n_users == 943);
    CHECK(ds.n_items == 1682);
    CHECK(ds.train.size() == 100000);
    split_dataset(ds, 1);
    // 8:2 per-user split puts roughly a fifth of interactions in test.
    CHECK(ds.test.size() > 19000);
    CHECK(ds.test.size() < 22000);
}
