#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rkf {

enum class ErrorCode {
    not_positive_definite,
    spectrum_out_of_domain,
    theta_out_of_range,
    budget_unreachable,
    no_convergence,
    dimension_mismatch,
    invalid_argument,
    invalid_model,
    config,
    io,
};

std::string_view to_string(ErrorCode code);

/// Error raised by every rkf routine. Recursions annotate the time step at
/// which the failure happened so diagnostics can name it.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message,
          std::optional<std::size_t> step = std::nullopt);

    ErrorCode code() const noexcept { return code_; }
    std::optional<std::size_t> step() const noexcept { return step_; }
    const std::string& message() const noexcept { return message_; }

    /// Copy of this error tagged with time step `t` (an existing tag wins).
    Error at_step(std::size_t t) const;

private:
    ErrorCode code_;
    std::string message_;
    std::optional<std::size_t> step_;
};

} // namespace rkf
