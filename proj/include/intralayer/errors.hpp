#pragma once

#include <stdexcept>
#include <string>

namespace intralayer {

enum class ErrorCode {
    Overflow,
    NegativeQuantity,
    ParseError,
    ValidationError,
    UnknownAccount,
    UnknownAgent,
    UnknownChain,
    UnknownAsset,
    InsufficientBalance,
    MissingPrice,
    MissingComponent,
    EmptyEventSet,
    EmptyRequiredSet,
    ChannelDown,
    ZeroDepth,
    CostExceedsValue,
    PathUnavailable,
    NoVolume,
    NegativePortfolio,
    ZeroLease,
    BelowMinimumRate,
    InsufficientInventory,
    ZeroRate,
    ZeroPrice,
    ZeroCapital,
    NoMatchingDeposit,
    InsufficientShares,
    InsufficientVaultLiquidity,
    Expired,
    ResourceFloorBreached,
    SchemaMismatch,
    CorruptLog,
    InternalError,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::Overflow: return "Overflow";
        case ErrorCode::NegativeQuantity: return "NegativeQuantity";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::UnknownAccount: return "UnknownAccount";
        case ErrorCode::UnknownAgent: return "UnknownAgent";
        case ErrorCode::UnknownChain: return "UnknownChain";
        case ErrorCode::UnknownAsset: return "UnknownAsset";
        case ErrorCode::InsufficientBalance: return "InsufficientBalance";
        case ErrorCode::MissingPrice: return "MissingPrice";
        case ErrorCode::MissingComponent: return "MissingComponent";
        case ErrorCode::EmptyEventSet: return "EmptyEventSet";
        case ErrorCode::EmptyRequiredSet: return "EmptyRequiredSet";
        case ErrorCode::ChannelDown: return "ChannelDown";
        case ErrorCode::ZeroDepth: return "ZeroDepth";
        case ErrorCode::CostExceedsValue: return "CostExceedsValue";
        case ErrorCode::PathUnavailable: return "PathUnavailable";
        case ErrorCode::NoVolume: return "NoVolume";
        case ErrorCode::NegativePortfolio: return "NegativePortfolio";
        case ErrorCode::ZeroLease: return "ZeroLease";
        case ErrorCode::BelowMinimumRate: return "BelowMinimumRate";
        case ErrorCode::InsufficientInventory: return "InsufficientInventory";
        case ErrorCode::ZeroRate: return "ZeroRate";
        case ErrorCode::ZeroPrice: return "ZeroPrice";
        case ErrorCode::ZeroCapital: return "ZeroCapital";
        case ErrorCode::NoMatchingDeposit: return "NoMatchingDeposit";
        case ErrorCode::InsufficientShares: return "InsufficientShares";
        case ErrorCode::InsufficientVaultLiquidity: return "InsufficientVaultLiquidity";
        case ErrorCode::Expired: return "Expired";
        case ErrorCode::ResourceFloorBreached: return "ResourceFloorBreached";
        case ErrorCode::SchemaMismatch: return "SchemaMismatch";
        case ErrorCode::CorruptLog: return "CorruptLog";
        case ErrorCode::InternalError: return "InternalError";
    }
    return "Unknown";
}

class SimError : public std::runtime_error {
public:
    SimError(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
    throw SimError(code, what);
}

} // namespace intralayer
