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
#include <cstring>
#include <stdexcept>

#include "rqfedrec/protocol.hpp"

namespace rqfedrec {
namespace {

constexpr std::uint32_t kUploadMagic = 0x52515550;     // "RQUP"
constexpr std::uint32_t kBroadcastMagic = 0x52514243;  // "RQBC"

// Blob tags inside a payload.
constexpr std::uint8_t kTagCodebookSemantic = 0x00;
constexpr std::uint8_t kTagCodebookCollab = 0x01;
constexpr std::uint8_t kTagIdsSemantic = 0x10;
constexpr std::uint8_t kTagIdsCollab = 0x11;

class Writer {
  public:
    template <typename T>
    void put(T v) {
        auto old = bytes.size();
        bytes.resize(old + sizeof(T));
        std::memcpy(bytes.data() + old, &v, sizeof(T));
    }
    void put_raw(const void* src, std::size_t n) {
        auto old = bytes.size();
        bytes.resize(old + n);
        std::memcpy(bytes.data() + old, src, n);
    }
    // Patches a u64 length prefix at `pos` with the byte count written since.
    std::size_t begin_blob() {
        put<std::uint64_t>(0);
        return bytes.size();
    }
    void end_blob(std::size_t start) {
        std::uint64_t len = bytes.size() - start;
        std::memcpy(bytes.data() + start - sizeof(std::uint64_t), &len, sizeof(len));
    }

    std::vector<std::uint8_t> bytes;
};

class Reader {
  public:
    explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

    template <typename T>
    T get() {
        if (pos_ + sizeof(T) > bytes_.size())
            throw std::runtime_error("decode: truncated payload");
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void get_raw(void* dst, std::size_t n) {
        if (pos_ + n > bytes_.size()) throw std::runtime_error("decode: truncated payload");
        std::memcpy(dst, bytes_.data() + pos_, n);
        pos_ += n;
    }
    bool done() const { return pos_ == bytes_.size(); }
    std::size_t pos() const { return pos_; }
    void skip(std::size_t n) {
        if (pos_ + n > bytes_.size()) throw std::runtime_error("decode: truncated payload");
        pos_ += n;
    }

  private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void write_codebooks(Writer& w, const CodebookSet& cb, std::uint8_t tag) {
    auto blob = w.begin_blob();
    w.put<std::uint8_t>(tag);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cb.L()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cb.M()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cb.dim()));
    for (const Matrix& level : cb.levels)
        w.put_raw(level.data(), level.size() * sizeof(double));
    w.end_blob(blob);
}

CodebookSet read_codebooks(Reader& r, std::uint8_t tag) {
    CodebookSet cb;
    cb.channel = (tag == kTagCodebookCollab) ? Channel::collaborative : Channel::semantic;
    auto L = r.get<std::uint32_t>();
    auto M = r.get<std::uint32_t>();
    auto d = r.get<std::uint32_t>();
    cb.levels.reserve(L);
    for (std::uint32_t l = 0; l < L; ++l) {
        Matrix level(M, d);
        r.get_raw(level.data(), level.size() * sizeof(double));
        cb.levels.push_back(std::move(level));
    }
    return cb;
}

void write_ids(Writer& w, const CodeAssignment& codes, std::uint8_t tag) {
    auto blob = w.begin_blob();
    w.put<std::uint8_t>(tag);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(codes.n_items));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(codes.L));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(codes.M));
    w.put_raw(codes.codes.data(), codes.codes.size() * sizeof(std::int32_t));
    w.end_blob(blob);
}

CodeAssignment read_ids(Reader& r) {
    CodeAssignment codes;
    codes.n_items = r.get<std::uint32_t>();
    codes.L = r.get<std::uint32_t>();
    codes.M = r.get<std::uint32_t>();
    codes.codes.resize(codes.n_items * codes.L);
    r.get_raw(codes.codes.data(), codes.codes.size() * sizeof(std::int32_t));
    return codes;
}

}  // namespace

std::size_t UploadPacket::param_count() const {
    std::size_t n = semantic.L() * semantic.M() * semantic.dim();
    if (collaborative) n += collaborative->L() * collaborative->M() * collaborative->dim();
    return n;
}

std::size_t BroadcastPayload::param_count() const {
    std::size_t n = semantic.L() * semantic.M() * semantic.dim();
    if (collaborative) n += collaborative->L() * collaborative->M() * collaborative->dim();
    if (semantic_codes) n += semantic_codes->n_items * semantic_codes->L;
    if (collaborative_codes) n += collaborative_codes->n_items * collaborative_codes->L;
    return n;
}

std::vector<std::uint8_t> encode(const UploadPacket& packet) {
    Writer w;
    w.put(kUploadMagic);
    w.put(packet.client_id);
    w.put(packet.sample_weight);
    w.put<std::uint8_t>(packet.collaborative ? 2 : 1);
    write_codebooks(w, packet.semantic, kTagCodebookSemantic);
    if (packet.collaborative) write_codebooks(w, *packet.collaborative, kTagCodebookCollab);
    return std::move(w.bytes);
}

std::vector<std::uint8_t> encode(const BroadcastPayload& payload) {
    Writer w;
    w.put(kBroadcastMagic);
    w.put(payload.round);
    w.put(payload.lambda);
    std::uint8_t blobs = 1;
    blobs += payload.collaborative ? 1 : 0;
    blobs += payload.semantic_codes ? 1 : 0;
    blobs += payload.collaborative_codes ? 1 : 0;
    w.put(blobs);
    write_codebooks(w, payload.semantic, kTagCodebookSemantic);
    if (payload.collaborative) write_codebooks(w, *payload.collaborative, kTagCodebookCollab);
    if (payload.semantic_codes) write_ids(w, *payload.semantic_codes, kTagIdsSemantic);
    if (payload.collaborative_codes) write_ids(w, *payload.collaborative_codes, kTagIdsCollab);
    return std::move(w.bytes);
}

UploadPacket decode_upload(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    if (r.get<std::uint32_t>() != kUploadMagic)
        throw std::runtime_error("decode_upload: bad magic");
    UploadPacket packet;
    packet.client_id = r.get<std::uint32_t>();
    packet.sample_weight = r.get<std::uint64_t>();
    auto blobs = r.get<std::uint8_t>();
    for (std::uint8_t b = 0; b < blobs; ++b) {
        (void)r.get<std::uint64_t>();  // length prefix
        auto tag = r.get<std::uint8_t>();
        if (tag == kTagCodebookSemantic)
            packet.semantic = read_codebooks(r, tag);
        else if (tag == kTagCodebookCollab)
            packet.collaborative = read_codebooks(r, tag);
        else
            throw std::runtime_error("decode_upload: unexpected blob tag");
    }
    if (!r.done()) throw std::runtime_error("decode_upload: trailing bytes");
    return packet;
}

BroadcastPayload decode_broadcast(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    if (r.get<std::uint32_t>() != kBroadcastMagic)
        throw std::runtime_error("decode_broadcast: bad magic");
    BroadcastPayload payload;
    payload.round = r.get<std::uint32_t>();
    payload.lambda = r.get<double>();
    auto blobs = r.get<std::uint8_t>();
    for (std::uint8_t b = 0; b < blobs; ++b) {
        (void)r.get<std::uint64_t>();
        auto tag = r.get<std::uint8_t>();
        switch (tag) {
            case kTagCodebookSemantic: payload.semantic = read_codebooks(r, tag); break;
            case kTagCodebookCollab: payload.collaborative = read_codebooks(r, tag); break;
            case kTagIdsSemantic: payload.semantic_codes = read_ids(r); break;
            case kTagIdsCollab: payload.collaborative_codes = read_ids(r); break;
            default: throw std::runtime_error("decode_broadcast: unexpected blob tag");
        }
    }
    if (!r.done()) throw std::runtime_error("decode_broadcast: trailing bytes");
    return payload;
}

std::size_t measured_param_count(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    auto magic = r.get<std::uint32_t>();
    if (magic == kUploadMagic) {
        r.skip(sizeof(std::uint32_t) + sizeof(std::uint64_t));
    } else if (magic == kBroadcastMagic) {
        r.skip(sizeof(std::uint32_t) + sizeof(double));
    } else {
        throw std::runtime_error("measured_param_count: bad magic");
    }
    auto blobs = r.get<std::uint8_t>();
    std::size_t params = 0;
    for (std::uint8_t b = 0; b < blobs; ++b) {
        auto len = r.get<std::uint64_t>();
        auto tag = r.get<std::uint8_t>();
        constexpr std::size_t header = 1 + 3 * sizeof(std::uint32_t);
        if (len < header) throw std::runtime_error("measured_param_count: bad blob length");
        std::size_t value_bytes = len - header;
        if (tag == kTagCodebookSemantic || tag == kTagCodebookCollab)
            params += value_bytes / sizeof(double);
        else if (tag == kTagIdsSemantic || tag == kTagIdsCollab)
            params += value_bytes / sizeof(std::int32_t);
        else
            throw std::runtime_error("measured_param_count: unexpected blob tag");
        r.skip(len - 1);  // tag already consumed
    }
    return params;
}

}  // namespace rqfedrec
