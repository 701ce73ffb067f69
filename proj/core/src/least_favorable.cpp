#include "rkf/least_favorable.hpp"

#include "rkf/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

namespace rkf {
namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void check_gains(const LeastFavorableModel& lfm, std::span<const Eigen::MatrixXd> gains)
{
    const std::size_t steps = lfm.horizon() + 1;
    if (gains.size() != steps) {
        std::ostringstream os;
        os << "gain schedule has " << gains.size() << " entries, model horizon needs " << steps;
        throw Error(ErrorCode::dimension_mismatch, os.str());
    }
    const Index n = lfm.nominal.state_dim();
    const Index p = lfm.nominal.obs_dim();
    for (std::size_t t = 0; t < steps; ++t) {
        if (gains[t].rows() != n || gains[t].cols() != p) {
            std::ostringstream os;
            os << "gain at t=" << t << " is " << gains[t].rows() << "x" << gains[t].cols() << ", expected " << n
               << "x" << p;
            throw Error(ErrorCode::dimension_mismatch, os.str());
        }
    }
}

// Paths are accumulated in fixed-size blocks that are reduced in block order,
// so sums do not depend on how blocks are spread over threads.
constexpr std::size_t kPathsPerBlock = 64;

struct BlockMoments {
    std::vector<Eigen::MatrixXd> second;  // sum of z z^T per t
    std::vector<Eigen::VectorXd> fourth;  // sum of z_i^4 per t
};

} // namespace

LeastFavorableModel build_least_favorable(const StateSpaceModel& model, const RobustPolicy& policy)
{
    LeastFavorableModel lfm{model, policy, run_gain_schedule(model, policy), {}, {}, {}, {}, {}, {}, {}, {}};
    const Index n = model.state_dim();
    const Index m = model.noise_dim();
    const std::size_t steps = model.horizon() + 1;

    lfm.A_tilde.resize(steps);
    lfm.B_tilde.resize(steps);
    lfm.C_tilde.resize(steps);
    lfm.D_tilde.resize(steps);
    lfm.H.resize(steps);
    lfm.Kv_tilde.resize(steps);
    lfm.noise_factor.resize(steps);
    lfm.omega_inv.assign(steps + 1, SymMatrix::zero(n));

    for (std::size_t k = steps; k-- > 0;) {
        const std::size_t t = k;
        const Eigen::MatrixXd& a = model.A(t);
        const Eigen::MatrixXd& b = model.B(t);
        const Eigen::MatrixXd& c = model.C(t);
        const Eigen::MatrixXd& d = model.D(t);
        const CovarianceStep& step = lfm.schedule[t];

        const Eigen::MatrixXd closed = a - step.gain * c;     // A - G C
        const Eigen::MatrixXd mixing = b - step.gain * d;     // B - G D
        const SymMatrix weight = lfm.omega_inv[t + 1] + step.phi;

        const SymMatrix kv_inv(Eigen::MatrixXd(Eigen::MatrixXd::Identity(m, m) -
                                               mixing.transpose() * weight.matrix() * mixing));
        SpdFactor kv_inv_factor = [&] {
            try {
                return cholesky(kv_inv);
            } catch (const Error&) {
                throw Error(ErrorCode::not_positive_definite,
                            "I - (B-GD)^T (Omega^{-1} + Phi)(B-GD) lost positive definiteness; "
                            "the tolerance is too large for this horizon",
                            t);
            }
        }();
        SymMatrix kv = kv_inv_factor.inverse();
        Eigen::MatrixXd h = kv.matrix() * mixing.transpose() * weight.matrix() * closed;
        lfm.omega_inv[t] = SymMatrix(Eigen::MatrixXd(closed.transpose() * weight.matrix() * closed +
                                                     h.transpose() * kv_inv.matrix() * h));

        Eigen::MatrixXd factor = cholesky(kv).lower();

        Eigen::MatrixXd at = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        at.topLeftCorner(n, n) = a;
        at.topRightCorner(n, n) = b * h;
        at.bottomRightCorner(n, n) = closed + mixing * h;
        Eigen::MatrixXd stacked(2 * n, m);
        stacked << b, mixing;
        Eigen::MatrixXd ct(c.rows(), 2 * n);
        ct << c, d * h;

        lfm.A_tilde[t] = std::move(at);
        lfm.B_tilde[t] = stacked * factor;
        lfm.C_tilde[t] = std::move(ct);
        lfm.D_tilde[t] = d * factor;
        lfm.H[t] = std::move(h);
        lfm.Kv_tilde[t] = std::move(kv);
        lfm.noise_factor[t] = std::move(factor);
    }
    return lfm;
}

SymMatrix initial_joint_cov(const SymMatrix& v0, InitialCoupling coupling)
{
    if (coupling == InitialCoupling::independent) {
        return kron_i2(v0);
    }
    const Index n = v0.dim();
    Eigen::MatrixXd out(2 * n, 2 * n);
    out << v0.matrix(), v0.matrix(), v0.matrix(), v0.matrix();
    return SymMatrix(out);
}

PerformanceReport evaluate_filter(const LeastFavorableModel& lfm, std::span<const Eigen::MatrixXd> gain_schedule,
                                  InitialCoupling coupling)
{
    check_gains(lfm, gain_schedule);
    const Index n = lfm.nominal.state_dim();
    const std::size_t steps = lfm.horizon() + 1;

    PerformanceReport report;
    report.pi.reserve(steps + 1);
    report.pi.push_back(initial_joint_cov(lfm.nominal.x0_cov(), coupling));
    for (std::size_t t = 0; t < steps; ++t) {
        Eigen::MatrixXd injected = Eigen::MatrixXd::Zero(2 * n, gain_schedule[t].cols());
        injected.topRows(n) = gain_schedule[t];
        const Eigen::MatrixXd transition = lfm.A_tilde[t] - injected * lfm.C_tilde[t];
        const Eigen::MatrixXd noise = lfm.B_tilde[t] - injected * lfm.D_tilde[t];
        report.pi.push_back(SymMatrix(Eigen::MatrixXd(transition * report.pi.back().matrix() * transition.transpose() +
                                                      noise * noise.transpose())));
    }
    report.variance_primary.reserve(report.pi.size());
    report.variance_reference.reserve(report.pi.size());
    for (const auto& pi : report.pi) {
        report.variance_primary.push_back(pi.matrix().diagonal().head(n));
        report.variance_reference.push_back(pi.matrix().diagonal().tail(n));
    }
    return report;
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t stream)
    : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL)))
{
}

double NormalStream::next()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    constexpr double kScale = 1.0 / 9007199254740992.0; // 2^-53
    // u1 in (0, 1], u2 in [0, 1)
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * kScale;
    const double u2 = static_cast<double>(engine_() >> 11) * kScale;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

MonteCarloResult simulate_lfm(const LeastFavorableModel& lfm, std::span<const Eigen::MatrixXd> gain_schedule,
                              const MonteCarloOptions& options)
{
    check_gains(lfm, gain_schedule);
    if (options.num_paths < 2) {
        throw Error(ErrorCode::invalid_argument, "Monte Carlo needs at least two paths");
    }
    const StateSpaceModel& model = lfm.nominal;
    const Index n = model.state_dim();
    const Index m = model.noise_dim();
    const std::size_t steps = lfm.horizon() + 1;
    const Eigen::MatrixXd v0_factor = cholesky(model.x0_cov()).lower();

    const std::size_t blocks = (options.num_paths + kPathsPerBlock - 1) / kPathsPerBlock;
    std::vector<BlockMoments> moments(blocks);

    auto run_block = [&](std::size_t block) {
        BlockMoments acc;
        acc.second.assign(steps + 1, Eigen::MatrixXd::Zero(2 * n, 2 * n));
        acc.fourth.assign(steps + 1, Eigen::VectorXd::Zero(2 * n));
        const std::size_t first = block * kPathsPerBlock;
        const std::size_t last = std::min(options.num_paths, first + kPathsPerBlock);

        Eigen::VectorXd draw_n(n);
        Eigen::VectorXd w(m);
        Eigen::VectorXd z(2 * n);
        for (std::size_t path = first; path < last; ++path) {
            NormalStream rng(options.seed, path);
            auto fill = [&](Eigen::VectorXd& v) {
                for (Index i = 0; i < v.size(); ++i) {
                    v(i) = rng.next();
                }
            };
            // Errors of the reference (policy) filter and the evaluated filter.
            // The plant itself may be unstable, so paths are propagated in
            // error coordinates: e_{t+1} = (A - G C) e_t + (B - G D) v_t.
            fill(draw_n);
            Eigen::VectorXd err_ref = v0_factor * draw_n;
            Eigen::VectorXd err_eval = err_ref;
            if (options.coupling == InitialCoupling::independent) {
                fill(draw_n);
                err_eval = v0_factor * draw_n;
            }
            auto record = [&](std::size_t t) {
                z << err_eval, err_ref;
                acc.second[t].noalias() += z * z.transpose();
                acc.fourth[t].array() += z.array().square().square();
            };
            record(0);
            for (std::size_t t = 0; t < steps; ++t) {
                const Eigen::MatrixXd& a = model.A(t);
                const Eigen::MatrixXd& b = model.B(t);
                const Eigen::MatrixXd& c = model.C(t);
                const Eigen::MatrixXd& d = model.D(t);
                fill(w);
                const Eigen::VectorXd v = lfm.H[t] * err_ref + lfm.noise_factor[t] * w;
                const Eigen::MatrixXd& g = lfm.schedule[t].gain;
                const Eigen::MatrixXd& g_eval = gain_schedule[t];
                err_ref = (a - g * c) * err_ref + (b - g * d) * v;
                err_eval = (a - g_eval * c) * err_eval + (b - g_eval * d) * v;
                record(t + 1);
            }
        }
        moments[block] = std::move(acc);
    };

    unsigned workers = options.threads != 0 ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, blocks));
    if (workers <= 1) {
        for (std::size_t b = 0; b < blocks; ++b) {
            run_block(b);
        }
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t b = w; b < blocks; b += workers) {
                    run_block(b);
                }
            });
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    MonteCarloResult result;
    result.num_paths = options.num_paths;
    const double count = static_cast<double>(options.num_paths);
    result.second_moment.reserve(steps + 1);
    result.diagonal_std_error.reserve(steps + 1);
    for (std::size_t t = 0; t <= steps; ++t) {
        Eigen::MatrixXd second = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        Eigen::VectorXd fourth = Eigen::VectorXd::Zero(2 * n);
        for (const auto& block : moments) {
            second += block.second[t];
            fourth += block.fourth[t];
        }
        second /= count;
        fourth /= count;
        // Sample variance of z_i^2 gives the standard error of its mean.
        const Eigen::VectorXd mean_sq = second.diagonal();
        Eigen::VectorXd se(2 * n);
        for (Index i = 0; i < 2 * n; ++i) {
            const double var = std::max(0.0, (fourth(i) - mean_sq(i) * mean_sq(i)) * count / (count - 1.0));
            se(i) = std::sqrt(var / count);
        }
        result.second_moment.emplace_back(second);
        result.diagonal_std_error.push_back(std::move(se));
    }
    return result;
}

} // namespace rkf
