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
#include <optional>
#include <span>
#include <vector>

#include "rqfedrec/quantizer.hpp"

namespace rqfedrec {

// What a client sends up: codebooks and its sample weight. Never any
// item-indexed or user-indexed matrix.
struct UploadPacket {
    std::uint32_t client_id = 0;
    std::uint64_t sample_weight = 0;  // |D_k|
    CodebookSet semantic;
    std::optional<CodebookSet> collaborative;

    // Codebook values carried, counted as parameters.
    std::size_t param_count() const;

    bool operator==(const UploadPacket&) const = default;
};

// What the server sends down at the start of a round: global codebooks, the
// round's collaborative rate, and whichever code-id lists are due (semantic
// ids only once, collaborative ids whenever they exist).
struct BroadcastPayload {
    std::uint32_t round = 0;
    double lambda = 0.0;
    CodebookSet semantic;
    std::optional<CodebookSet> collaborative;
    std::optional<CodeAssignment> semantic_codes;
    std::optional<CodeAssignment> collaborative_codes;

    // Codebook values plus code ids carried.
    std::size_t param_count() const;

    bool operator==(const BroadcastPayload&) const = default;
};

// Byte layout (little endian): magic, fixed header, then length-prefixed
// channel blobs (tag, L, M, d, row-major f64 values) and, for broadcasts,
// length-prefixed id blobs (tag, n_items, L, row-major i32 ids).
std::vector<std::uint8_t> encode(const UploadPacket& packet);
std::vector<std::uint8_t> encode(const BroadcastPayload& payload);
UploadPacket decode_upload(std::span<const std::uint8_t> bytes);
BroadcastPayload decode_broadcast(std::span<const std::uint8_t> bytes);

// Parameter counts recovered purely from payload byte lengths (f64 values at
// 8 bytes, i32 ids at 4 bytes): the measured side of the accounting checks.
std::size_t measured_param_count(std::span<const std::uint8_t> bytes);

}  // namespace rqfedrec
