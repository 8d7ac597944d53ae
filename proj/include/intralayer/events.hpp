#pragma once

#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp" // nlohmann/json single header (vendored)

#include "intralayer/errors.hpp"
#include "intralayer/fixed.hpp"
#include "intralayer/ids.hpp"

namespace intralayer::events {

using Json = nlohmann::ordered_json;

inline std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        if (ctx) EVP_MD_CTX_free(ctx);
        raise(ErrorCode::InternalError, "sha256 failure");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

// Append-only, strictly ordered by (epoch, step, seq). One JSON object per
// line when serialized; the run hash is the SHA-256 of that serialization.
class EventLog {
public:
    const Json& append(EpochIndex epoch, StepIndex step, const std::string& type,
                       Json fields) {
        Json rec;
        rec["epoch"] = epoch;
        rec["step"] = step;
        rec["seq"] = next_seq_++;
        rec["type"] = type;
        for (auto& [key, value] : fields.items()) rec[key] = std::move(value);
        records_.push_back(std::move(rec));
        return records_.back();
    }

    const std::vector<Json>& records() const { return records_; }
    size_t size() const { return records_.size(); }

    uint64_t next_seq() const { return next_seq_; }
    void restore_next_seq(uint64_t s) { next_seq_ = s; }

    std::string to_jsonl() const {
        std::string out;
        for (const auto& rec : records_) {
            out += rec.dump();
            out += '\n';
        }
        return out;
    }

    std::string hash() const { return sha256_hex(to_jsonl()); }

private:
    std::vector<Json> records_;
    uint64_t next_seq_ = 0;
};

inline Json fixed_json(const Fixed& f) { return Json(f.to_string()); }

} // namespace intralayer::events
