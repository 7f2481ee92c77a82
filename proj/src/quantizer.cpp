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
#include "rqfedrec/quantizer.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "rqfedrec/kernels.hpp"

namespace rqfedrec {

CodebookSet CodebookSet::gaussian(Channel ch, std::size_t L, std::size_t M, std::size_t d,
                                  double stddev, Rng& rng) {
    CodebookSet cb;
    cb.channel = ch;
    cb.levels.reserve(L);
    for (std::size_t l = 0; l < L; ++l) cb.levels.push_back(Matrix::gaussian(M, d, stddev, rng));
    return cb;
}

CodebookSet CodebookSet::zeros(Channel ch, std::size_t L, std::size_t M, std::size_t d) {
    CodebookSet cb;
    cb.channel = ch;
    cb.levels.assign(L, Matrix(M, d));
    return cb;
}

bool CodebookSet::same_shape(const CodebookSet& other) const {
    if (levels.size() != other.levels.size()) return false;
    for (std::size_t l = 0; l < levels.size(); ++l)
        if (!levels[l].same_shape(other.levels[l])) return false;
    return true;
}

bool CodebookSet::operator==(const CodebookSet& other) const {
    return channel == other.channel && levels == other.levels;
}

namespace {

std::int32_t nearest_center(std::span<const double> point, const Matrix& centers) {
    std::int32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centers.rows(); ++j) {
        double d = kernels::l2sq(point.data(), centers.row(j).data(), point.size());
        if (d < best_d) {  // strict < keeps the lowest index on ties
            best_d = d;
            best = static_cast<std::int32_t>(j);
        }
    }
    return best;
}

}  // namespace

Matrix kmeans_plusplus_init(const Matrix& points, std::size_t M, std::uint64_t seed) {
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    Rng rng(seed);
    Matrix centers(M, d);

    auto first = static_cast<std::size_t>(rng.uniform_below(n));
    std::copy_n(points.row(first).data(), d, centers.row(0).data());

    std::vector<double> dist2(n);
    for (std::size_t i = 0; i < n; ++i)
        dist2[i] = kernels::l2sq(points.row(i).data(), centers.row(0).data(), d);

    for (std::size_t c = 1; c < M; ++c) {
        double total = 0.0;
        for (double v : dist2) total += v;
        std::size_t pick;
        if (total <= 0.0) {
            // All points already coincide with a chosen center.
            pick = static_cast<std::size_t>(rng.uniform_below(n));
        } else {
            double threshold = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += dist2[i];
                if (acc >= threshold) {
                    pick = i;
                    break;
                }
            }
        }
        std::copy_n(points.row(pick).data(), d, centers.row(c).data());
        for (std::size_t i = 0; i < n; ++i) {
            double v = kernels::l2sq(points.row(i).data(), centers.row(c).data(), d);
            dist2[i] = std::min(dist2[i], v);
        }
    }
    return centers;
}

KmeansResult kmeans_lloyd(const Matrix& points, Matrix centers, std::size_t max_iters) {
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    const std::size_t M = centers.rows();
    if (centers.cols() != d) throw std::invalid_argument("kmeans_lloyd: dim mismatch");

    std::vector<std::int32_t> assign(n);
    for (std::size_t i = 0; i < n; ++i) assign[i] = nearest_center(points.row(i), centers);

    std::vector<std::size_t> counts(M);
    std::vector<std::int32_t> next(n);
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        centers.fill(0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto c = static_cast<std::size_t>(assign[i]);
            kernels::axpy(1.0, points.row(i).data(), centers.row(c).data(), d);
            ++counts[c];
        }
        for (std::size_t c = 0; c < M; ++c) {
            if (counts[c] > 0)
                kernels::scale(centers.row(c).data(), 1.0 / static_cast<double>(counts[c]), d);
        }
        // Re-seed empty clusters with the point farthest from its center.
        for (std::size_t c = 0; c < M; ++c) {
            if (counts[c] > 0) continue;
            double worst = -1.0;
            std::size_t worst_i = 0;
            for (std::size_t i = 0; i < n; ++i) {
                auto a = static_cast<std::size_t>(assign[i]);
                if (counts[a] == 0) continue;  // already stolen by another empty cluster
                double dd = kernels::l2sq(points.row(i).data(), centers.row(a).data(), d);
                if (dd > worst) {
                    worst = dd;
                    worst_i = i;
                }
            }
            std::copy_n(points.row(worst_i).data(), d, centers.row(c).data());
            assign[worst_i] = static_cast<std::int32_t>(c);
            counts[c] = 1;
        }

        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] = nearest_center(points.row(i), centers);
            if (next[i] != assign[i]) changed = true;
        }
        assign.swap(next);
        if (!changed) break;
    }

    KmeansResult res;
    res.distortion = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        res.distortion += kernels::l2sq(
            points.row(i).data(), centers.row(static_cast<std::size_t>(assign[i])).data(), d);
    }
    res.centers = std::move(centers);
    res.assignment = std::move(assign);
    return res;
}

KmeansResult kmeans(const Matrix& points, std::size_t M, std::size_t max_iters,
                    std::uint64_t seed) {
    if (points.rows() == 0 || M == 0) throw std::invalid_argument("kmeans: empty input");
    if (!points.all_finite()) throw std::invalid_argument("kmeans: non-finite input");
    return kmeans_lloyd(points, kmeans_plusplus_init(points, M, seed), max_iters);
}

RqKmeansResult rq_kmeans(const Matrix& table, std::size_t M, std::size_t L,
                         std::size_t max_iters, std::uint64_t seed, Channel channel) {
    if (L == 0) throw std::invalid_argument("rq_kmeans: L must be >= 1");
    const std::size_t n = table.rows();
    const std::size_t d = table.cols();

    RqKmeansResult out;
    out.codebooks.channel = channel;
    out.codebooks.levels.reserve(L);
    out.codes.n_items = n;
    out.codes.L = L;
    out.codes.M = M;
    out.codes.codes.assign(n * L, 0);

    Matrix residual = table;
    for (std::size_t level = 0; level < L; ++level) {
        KmeansResult km = kmeans(residual, M, max_iters, derive_seed(seed, level));
        for (std::size_t i = 0; i < n; ++i) {
            auto code = km.assignment[i];
            out.codes.row(i)[level] = code;
            kernels::axpy(-1.0, km.centers.row(static_cast<std::size_t>(code)).data(),
                          residual.row(i).data(), d);
        }
        out.codebooks.levels.push_back(std::move(km.centers));
    }
    return out;
}

void reconstruct_into(const CodebookSet& codebooks, const CodeAssignment& codes,
                      std::size_t item_id, std::span<double> out) {
    if (item_id >= codes.n_items) throw std::out_of_range("reconstruct: item out of range");
    if (codebooks.L() != codes.L) throw std::invalid_argument("reconstruct: level mismatch");
    std::fill(out.begin(), out.end(), 0.0);
    auto row = codes.row(item_id);
    for (std::size_t l = 0; l < codes.L; ++l) {
        auto code = row[l];
        if (code < 0 || static_cast<std::size_t>(code) >= codebooks.levels[l].rows())
            throw std::out_of_range("reconstruct: code id out of range");
        kernels::axpy(1.0, codebooks.levels[l].row(static_cast<std::size_t>(code)).data(),
                      out.data(), out.size());
    }
}

std::vector<double> reconstruct(const CodebookSet& codebooks, const CodeAssignment& codes,
                                std::size_t item_id) {
    std::vector<double> out(codebooks.dim(), 0.0);
    reconstruct_into(codebooks, codes, item_id, out);
    return out;
}

CodeAssignment assign_codes(const Matrix& table, const CodebookSet& codebooks) {
    if (codebooks.dim() != table.cols())
        throw std::invalid_argument("assign_codes: dim mismatch");
    const std::size_t n = table.rows();
    const std::size_t d = table.cols();
    const std::size_t L = codebooks.L();

    CodeAssignment codes;
    codes.n_items = n;
    codes.L = L;
    codes.M = codebooks.M();
    codes.codes.assign(n * L, 0);

    std::vector<double> residual(d);
    for (std::size_t i = 0; i < n; ++i) {
        auto src = table.row(i);
        std::copy(src.begin(), src.end(), residual.begin());
        for (std::size_t l = 0; l < L; ++l) {
            std::int32_t code = nearest_center(residual, codebooks.levels[l]);
            codes.row(i)[l] = code;
            kernels::axpy(-1.0, codebooks.levels[l].row(static_cast<std::size_t>(code)).data(),
                          residual.data(), d);
        }
    }
    return codes;
}

double mean_reconstruction_error(const Matrix& table, const CodebookSet& codebooks,
                                 const CodeAssignment& codes) {
    const std::size_t n = table.rows();
    std::vector<double> recon(table.cols());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        reconstruct_into(codebooks, codes, i, recon);
        total += kernels::l2sq(table.row(i).data(), recon.data(), recon.size());
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

}  // namespace rqfedrec
