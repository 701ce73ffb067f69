#pragma once

#include "rkf/robust_filter.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rkf::csv {

/// 17 significant digits ("%.17g"), enough to round-trip any double.
std::string format(double value);

/// Comma-separated writer with a fixed header. Fields are written verbatim;
/// callers keep commas out of text fields.
class Writer {
public:
    Writer(std::ostream& out, std::vector<std::string> header);

    Writer& field(std::string_view text);
    Writer& field(double value);
    Writer& field(std::size_t value);
    void end_row();

    std::size_t columns() const noexcept { return header_.size(); }

private:
    std::ostream& out_;
    std::vector<std::string> header_;
    std::size_t column_ = 0;
};

/// One observation vector per row, `obs_dim` numeric columns. A first line
/// with non-numeric fields is treated as a header. Throws Error{io} with the
/// offending line number.
std::vector<Eigen::VectorXd> read_observations(std::istream& in, Eigen::Index obs_dim);

/// Header of the filter trace table for state dimension n and observation
/// dimension p.
std::vector<std::string> filter_trace_header(Eigen::Index n, Eigen::Index p);

/// t, theta, xhat_i, P_i_j, V_i_j (upper triangle), G_i_j (row-major).
void write_filter_trace(std::ostream& out, const FilterTrace& trace);

} // namespace rkf::csv
