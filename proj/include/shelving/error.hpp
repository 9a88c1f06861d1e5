#pragma once

#include <stdexcept>
#include <string>

namespace shelving
{

enum class ErrorCode
{
    InvalidLabel,
    DuplicateLabel,
    UnknownComponent,
    InvalidEdge,
    NotCollapsed,
    InvalidStep,
    OracleUnsupported,
    IllegalHit,
    InvalidDepth,
    NotExtensible,
    EmptyLog,
    NoWeakBranch,
    LogFormat,
    ConfigError,
    InvariantBreach,
};

char const* to_string(ErrorCode code);

// Every failure in the library surfaces as this exception; `code()` tells
// callers which contract was violated.
class Error : public std::runtime_error
{
  public:
    Error(ErrorCode code, std::string const& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace shelving
