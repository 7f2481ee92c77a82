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
#include <vector>

#include "rqfedrec/matrix.hpp"

namespace rqfedrec {

enum class Channel : std::uint8_t { semantic = 0, collaborative = 1 };

// L stacked codebooks of M x d trainable code embeddings for one channel.
struct CodebookSet {
    std::vector<Matrix> levels;  // each M x d
    Channel channel = Channel::semantic;

    std::size_t L() const { return levels.size(); }
    std::size_t M() const { return levels.empty() ? 0 : levels[0].rows(); }
    std::size_t dim() const { return levels.empty() ? 0 : levels[0].cols(); }

    static CodebookSet gaussian(Channel ch, std::size_t L, std::size_t M, std::size_t d,
                                double stddev, Rng& rng);
    static CodebookSet zeros(Channel ch, std::size_t L, std::size_t M, std::size_t d);

    bool same_shape(const CodebookSet& other) const;
    bool operator==(const CodebookSet& other) const;
};

// Per-item tuple of L discrete code ids, row-major (n_items x L).
struct CodeAssignment {
    std::size_t n_items = 0;
    std::size_t L = 0;
    std::size_t M = 0;  // codebook size the ids index into
    std::vector<std::int32_t> codes;

    std::span<const std::int32_t> row(std::size_t item) const {
        return {codes.data() + item * L, L};
    }
    std::span<std::int32_t> row(std::size_t item) { return {codes.data() + item * L, L}; }

    bool operator==(const CodeAssignment&) const = default;
};

struct KmeansResult {
    Matrix centers;                     // M x d
    std::vector<std::int32_t> assignment;  // one center id per point
    double distortion = 0.0;            // sum of squared distances
};

// k-means++ seeding followed by Lloyd iterations until the assignment stops
// changing or max_iters is hit. Clusters that empty out are re-seeded with
// the point currently farthest from its assigned center. Nearest-center ties
// break toward the lowest index.
KmeansResult kmeans(const Matrix& points, std::size_t M, std::size_t max_iters,
                    std::uint64_t seed);

// Lloyd iterations from caller-provided initial centers (the piece the
// reference-oracle tests drive directly).
KmeansResult kmeans_lloyd(const Matrix& points, Matrix initial_centers, std::size_t max_iters);

Matrix kmeans_plusplus_init(const Matrix& points, std::size_t M, std::uint64_t seed);

struct RqKmeansResult {
    CodebookSet codebooks;
    CodeAssignment codes;
};

// Residual quantization: level 1 clusters the table, each further level
// clusters what the previous levels left unexplained.
RqKmeansResult rq_kmeans(const Matrix& table, std::size_t M, std::size_t L,
                         std::size_t max_iters, std::uint64_t seed,
                         Channel channel = Channel::semantic);

// Sum of the selected code embeddings across levels.
std::vector<double> reconstruct(const CodebookSet& codebooks, const CodeAssignment& codes,
                                std::size_t item_id);
void reconstruct_into(const CodebookSet& codebooks, const CodeAssignment& codes,
                      std::size_t item_id, std::span<double> out);

// Greedy level-by-level assignment of rows against fixed codebooks.
CodeAssignment assign_codes(const Matrix& table, const CodebookSet& codebooks);

// Mean over rows of || row - reconstruction ||^2.
double mean_reconstruction_error(const Matrix& table, const CodebookSet& codebooks,
                                 const CodeAssignment& codes);

}  // namespace rqfedrec
