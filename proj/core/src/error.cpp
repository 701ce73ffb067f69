#include "rkf/error.hpp"

namespace rkf {
namespace {

std::string compose(ErrorCode code, const std::string& message, std::optional<std::size_t> step)
{
    std::string out(to_string(code));
    if (step) {
        out += " at t=" + std::to_string(*step);
    }
    out += ": ";
    out += message;
    return out;
}

} // namespace

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::not_positive_definite: return "NotPositiveDefinite";
    case ErrorCode::spectrum_out_of_domain: return "SpectrumOutOfDomain";
    case ErrorCode::theta_out_of_range: return "ThetaOutOfRange";
    case ErrorCode::budget_unreachable: return "BudgetUnreachable";
    case ErrorCode::no_convergence: return "NoConvergence";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::invalid_model: return "InvalidModel";
    case ErrorCode::config: return "ConfigError";
    case ErrorCode::io: return "IOError";
    }
    return "UnknownError";
}

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> step)
    : std::runtime_error(compose(code, message, step)), code_(code), message_(message), step_(step)
{
}

Error Error::at_step(std::size_t t) const
{
    return Error(code_, message_, step_ ? step_ : std::optional<std::size_t>(t));
}

} // namespace rkf
