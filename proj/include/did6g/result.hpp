#pragma once

#include <cassert>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace did6g {

enum class Errc {
    // identity_core
    InvalidSeed,
    PurposeMismatch,
    InvalidContext,
    NotController,
    // registry
    WriteDenied,
    ReadDenied,
    BadSignature,
    VersionGap,
    NotFound,
    EmptyPending,
    UnknownActor,
    TooFewReplicas,
    // agent_channel
    AuthFailed,
    ResolveFailed,
    StaleDocument,
    DecryptFailed,
    UnknownChannel,
    NoRegistryAccess,
    // credential
    NoAssertionKey,
    EmptyClaims,
    NotHolder,
    NotIssuer,
    // harness / io
    BadConfig,
    IoError,
};

std::string_view errc_name(Errc code);

struct Error {
    Errc code;
    std::string detail;
};

inline Error make_error(Errc code, std::string detail = {}) {
    return Error{code, std::move(detail)};
}

/// Minimal expected-like carrier; the project-wide error idiom.
template <typename T>
class Result {
public:
    Result(T value) : data_(std::move(value)) {}
    Result(Error err) : data_(std::move(err)) {}

    bool ok() const { return std::holds_alternative<T>(data_); }
    explicit operator bool() const { return ok(); }

    T& value() {
        assert(ok());
        return std::get<T>(data_);
    }
    const T& value() const {
        assert(ok());
        return std::get<T>(data_);
    }
    const Error& error() const {
        assert(!ok());
        return std::get<Error>(data_);
    }
    Errc code() const { return error().code; }

private:
    std::variant<T, Error> data_;
};

template <>
class Result<void> {
public:
    Result() = default;
    Result(Error err) : err_(std::move(err)) {}

    bool ok() const { return !err_.has_value(); }
    explicit operator bool() const { return ok(); }
    const Error& error() const {
        assert(!ok());
        return *err_;
    }
    Errc code() const { return error().code; }

private:
    std::optional<Error> err_;
};

}  // namespace did6g
