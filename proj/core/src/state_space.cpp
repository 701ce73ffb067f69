#include "rkf/state_space.hpp"

#include "rkf/error.hpp"

#include <cmath>
#include <sstream>

namespace rkf {
namespace {

std::string shape(const Eigen::MatrixXd& m)
{
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_sequence(const char* name, const std::vector<Eigen::MatrixXd>& seq, std::size_t horizon,
                    std::vector<std::string>& out)
{
    if (seq.empty()) {
        out.push_back(std::string(name) + ": missing");
    } else if (seq.size() != 1 && seq.size() != horizon + 1) {
        std::ostringstream os;
        os << name << ": time-varying sequence has " << seq.size() << " matrices, expected 1 or "
           << horizon + 1 << " (horizon + 1)";
        out.push_back(os.str());
    }
}

const Eigen::MatrixXd& pick(const std::vector<Eigen::MatrixXd>& seq, std::size_t t)
{
    return seq.size() == 1 ? seq.front() : seq[t];
}

} // namespace

std::vector<std::string> diagnose(const ModelData& data)
{
    std::vector<std::string> out;
    if (data.horizon == 0) {
        out.emplace_back("horizon: must be a positive integer");
    }
    check_sequence("A", data.A, data.horizon, out);
    check_sequence("B", data.B, data.horizon, out);
    check_sequence("C", data.C, data.horizon, out);
    check_sequence("D", data.D, data.horizon, out);
    if (!out.empty()) {
        return out;
    }

    const Index n = data.A.front().rows();
    const Index p = data.C.front().rows();
    if (n == 0) {
        out.emplace_back("A: state dimension must be positive");
        return out;
    }
    if (p == 0) {
        out.emplace_back("C: observation dimension must be positive");
        return out;
    }
    const Index m = data.B.front().cols();

    const std::size_t steps = data.horizon + 1;
    for (std::size_t t = 0; t < steps; ++t) {
        const bool first = t == 0;
        auto tag = [&](const char* name) {
            return std::string(name) + (first ? "" : "[" + std::to_string(t) + "]");
        };
        const Eigen::MatrixXd& a = pick(data.A, t);
        const Eigen::MatrixXd& b = pick(data.B, t);
        const Eigen::MatrixXd& c = pick(data.C, t);
        const Eigen::MatrixXd& d = pick(data.D, t);
        if (!first && data.A.size() == 1 && data.B.size() == 1 && data.C.size() == 1 && data.D.size() == 1) {
            break;
        }
        const std::size_t before = out.size();
        if (a.rows() != n || a.cols() != n) {
            out.push_back(tag("A") + ": expected " + std::to_string(n) + "x" + std::to_string(n) + ", got " + shape(a));
        }
        if (b.rows() != n || b.cols() != m) {
            out.push_back(tag("B") + ": expected " + std::to_string(n) + "x" + std::to_string(m) + ", got " + shape(b));
        }
        if (c.rows() != p || c.cols() != n) {
            out.push_back(tag("C") + ": expected " + std::to_string(p) + "x" + std::to_string(n) + ", got " + shape(c));
        }
        if (d.rows() != p || d.cols() != m) {
            out.push_back(tag("D") + ": expected " + std::to_string(p) + "x" + std::to_string(m) + ", got " + shape(d));
        }
        for (const auto* mat : {&a, &b, &c, &d}) {
            if (!mat->allFinite()) {
                out.push_back("model matrices at t=" + std::to_string(t) + " contain non-finite entries");
                break;
            }
        }
        if (out.size() != before) {
            continue;
        }
        if (m != n + p) {
            std::ostringstream os;
            os << "Gamma invertibility rule: noise matrix Gamma = [B; D] must be square and invertible "
               << "(m = n + p), got m=" << m << " with n+p=" << n + p
               << "; compress the column space of Gamma first";
            out.push_back(os.str());
            break;
        }
        Eigen::MatrixXd gamma(n + p, m);
        gamma << b, d;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(gamma);
        const Eigen::VectorXd& s = svd.singularValues();
        const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : INFINITY;
        if (!(cond <= kMaxGammaCondition)) {
            std::ostringstream os;
            os << "Gamma invertibility rule: Gamma = [B; D] at t=" << t << " is singular or ill conditioned"
               << " (condition number " << cond << " > " << kMaxGammaCondition << ")";
            out.push_back(os.str());
        }
    }

    if (data.x0_mean.size() != n) {
        out.push_back("x0_mean: expected length " + std::to_string(n) + ", got " + std::to_string(data.x0_mean.size()));
    }
    if (data.x0_cov.rows() != n || data.x0_cov.cols() != n) {
        out.push_back("x0_cov: expected " + std::to_string(n) + "x" + std::to_string(n) + ", got " + shape(data.x0_cov));
    } else if (!data.x0_cov.allFinite() || (data.x0_cov - data.x0_cov.transpose()).cwiseAbs().maxCoeff() >
                                                  1e-12 * std::max(1.0, data.x0_cov.cwiseAbs().maxCoeff())) {
        out.emplace_back("x0_cov: must be symmetric");
    } else {
        Eigen::LLT<Eigen::MatrixXd> llt(data.x0_cov);
        if (llt.info() != Eigen::Success) {
            out.emplace_back("x0_cov: must be positive definite");
        }
    }
    return out;
}

StateSpaceModel::StateSpaceModel(ModelData data) : data_(std::move(data))
{
    const auto problems = diagnose(data_);
    if (!problems.empty()) {
        std::string message;
        for (const auto& p : problems) {
            if (!message.empty()) {
                message += "; ";
            }
            message += p;
        }
        throw Error(ErrorCode::invalid_model, message);
    }
    n_ = data_.A.front().rows();
    p_ = data_.C.front().rows();
    x0_cov_ = SymMatrix(data_.x0_cov);
}

StateSpaceModel StateSpaceModel::time_invariant(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C,
                                                Eigen::MatrixXd D, Eigen::VectorXd x0_mean,
                                                Eigen::MatrixXd x0_cov, std::size_t horizon)
{
    ModelData data;
    data.A = {std::move(A)};
    data.B = {std::move(B)};
    data.C = {std::move(C)};
    data.D = {std::move(D)};
    data.x0_mean = std::move(x0_mean);
    data.x0_cov = std::move(x0_cov);
    data.horizon = horizon;
    return StateSpaceModel(std::move(data));
}

bool StateSpaceModel::is_time_invariant() const noexcept
{
    return data_.A.size() == 1 && data_.B.size() == 1 && data_.C.size() == 1 && data_.D.size() == 1;
}

StateSpaceModel StateSpaceModel::with_horizon(std::size_t horizon) const
{
    ModelData copy = data_;
    copy.horizon = horizon;
    return StateSpaceModel(std::move(copy));
}

const Eigen::MatrixXd& StateSpaceModel::at(const std::vector<Eigen::MatrixXd>& seq, std::size_t t) const
{
    if (t > data_.horizon) {
        throw Error(ErrorCode::dimension_mismatch,
                    "time index " + std::to_string(t) + " beyond horizon " + std::to_string(data_.horizon));
    }
    return pick(seq, t);
}

RobustPolicy::RobustPolicy(Mode mode, Tau tau, std::vector<double> values)
    : mode_(mode), tau_(tau), values_(std::move(values))
{
}

RobustPolicy RobustPolicy::standard()
{
    return RobustPolicy(Mode::standard, Tau(0.0), {});
}

RobustPolicy RobustPolicy::robust(Tau tau, std::vector<double> tolerances)
{
    if (tolerances.empty()) {
        throw Error(ErrorCode::invalid_argument, "robust policy needs at least one tolerance");
    }
    for (double c : tolerances) {
        if (!(c >= 0.0) || !std::isfinite(c)) {
            std::ostringstream os;
            os << "tolerance c must be finite and >= 0, got " << c;
            throw Error(ErrorCode::invalid_argument, os.str());
        }
    }
    return RobustPolicy(Mode::robust, tau, std::move(tolerances));
}

RobustPolicy RobustPolicy::robust(Tau tau, double tolerance)
{
    return robust(tau, std::vector<double>{tolerance});
}

RobustPolicy RobustPolicy::risk_sensitive(Tau tau, double theta)
{
    if (!(theta > 0.0) || !std::isfinite(theta)) {
        std::ostringstream os;
        os << "risk-sensitive theta must be finite and > 0, got " << theta;
        throw Error(ErrorCode::invalid_argument, os.str());
    }
    return RobustPolicy(Mode::risk_sensitive, tau, {theta});
}

double RobustPolicy::tolerance(std::size_t t) const
{
    if (mode_ != Mode::robust) {
        return 0.0;
    }
    if (values_.size() == 1) {
        return values_.front();
    }
    if (t >= values_.size()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "tolerance schedule has no entry for t=" + std::to_string(t));
    }
    return values_[t];
}

double RobustPolicy::theta() const
{
    return mode_ == Mode::risk_sensitive ? values_.front() : 0.0;
}

std::string RobustPolicy::describe() const
{
    std::ostringstream os;
    os << to_string(mode_);
    if (mode_ == Mode::standard) {
        return os.str();
    }
    os << "(tau=" << tau_.value();
    if (mode_ == Mode::risk_sensitive) {
        os << ", theta=" << values_.front();
    } else if (values_.size() == 1) {
        os << ", c=" << values_.front();
    } else {
        os << ", c=schedule[" << values_.size() << "]";
    }
    os << ")";
    return os.str();
}

std::string_view to_string(RobustPolicy::Mode mode)
{
    switch (mode) {
    case RobustPolicy::Mode::standard: return "standard";
    case RobustPolicy::Mode::robust: return "robust";
    case RobustPolicy::Mode::risk_sensitive: return "risk_sensitive";
    }
    return "unknown";
}

} // namespace rkf
