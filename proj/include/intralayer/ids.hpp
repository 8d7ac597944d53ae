#pragma once

#include <compare>
#include <functional>
#include <string>
#include <utility>

namespace intralayer {

// Opaque string identifier. The Tag keeps asset/chain/agent ids from mixing.
template <typename Tag>
class Id {
public:
    Id() = default;
    explicit Id(std::string value) : value_(std::move(value)) {}

    const std::string& str() const { return value_; }
    bool empty() const { return value_.empty(); }

    auto operator<=>(const Id&) const = default;

private:
    std::string value_;
};

struct AssetTag {};
struct ChainTag {};
struct AgentTag {};

using AssetId = Id<AssetTag>;
using ChainId = Id<ChainTag>;
using AgentId = Id<AgentTag>;

using EpochIndex = int;
using StepIndex = int;

} // namespace intralayer

template <typename Tag>
struct std::hash<intralayer::Id<Tag>> {
    std::size_t operator()(const intralayer::Id<Tag>& id) const {
        return std::hash<std::string>{}(id.str());
    }
};
