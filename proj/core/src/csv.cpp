#include "rkf/csv.hpp"

#include "rkf/error.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace rkf::csv {
namespace {

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

bool parse_double(const std::string& s, double& out)
{
    if (s.empty()) {
        return false;
    }
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

} // namespace

std::string format(double value)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

Writer::Writer(std::ostream& out, std::vector<std::string> header) : out_(out), header_(std::move(header))
{
    for (std::size_t i = 0; i < header_.size(); ++i) {
        out_ << (i ? "," : "") << header_[i];
    }
    out_ << '\n';
}

Writer& Writer::field(std::string_view text)
{
    if (column_ >= header_.size()) {
        throw Error(ErrorCode::dimension_mismatch, "CSV row has more fields than the header");
    }
    out_ << (column_ ? "," : "") << text;
    ++column_;
    return *this;
}

Writer& Writer::field(double value)
{
    return field(std::string_view(format(value)));
}

Writer& Writer::field(std::size_t value)
{
    return field(std::string_view(std::to_string(value)));
}

void Writer::end_row()
{
    if (column_ != header_.size()) {
        throw Error(ErrorCode::dimension_mismatch, "CSV row has fewer fields than the header");
    }
    out_ << '\n';
    column_ = 0;
}

std::vector<Eigen::VectorXd> read_observations(std::istream& in, Eigen::Index obs_dim)
{
    std::vector<Eigen::VectorXd> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto cells = split(line);
        Eigen::VectorXd y(obs_dim);
        bool numeric = static_cast<Eigen::Index>(cells.size()) == obs_dim;
        for (Eigen::Index i = 0; numeric && i < obs_dim; ++i) {
            numeric = parse_double(cells[static_cast<std::size_t>(i)], y(i));
        }
        if (!numeric) {
            if (out.empty() && line_no == 1) {
                continue; // header
            }
            std::ostringstream os;
            os << "observation line " << line_no << ": expected " << obs_dim << " numeric fields";
            throw Error(ErrorCode::io, os.str());
        }
        out.push_back(std::move(y));
    }
    return out;
}

std::vector<std::string> filter_trace_header(Eigen::Index n, Eigen::Index p)
{
    std::vector<std::string> h{"t", "theta"};
    for (Eigen::Index i = 0; i < n; ++i) {
        h.push_back("xhat_" + std::to_string(i + 1));
    }
    for (const char* name : {"P", "V"}) {
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i; j < n; ++j) {
                h.push_back(std::string(name) + "_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
            }
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            h.push_back("G_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
        }
    }
    return h;
}

void write_filter_trace(std::ostream& out, const FilterTrace& trace)
{
    if (trace.steps.empty()) {
        throw Error(ErrorCode::invalid_argument, "empty filter trace");
    }
    const Eigen::Index n = trace.steps.front().state_pred.size();
    const Eigen::Index p = trace.steps.front().gain.cols();
    Writer w(out, filter_trace_header(n, p));
    for (std::size_t t = 0; t < trace.steps.size(); ++t) {
        const FilterStep& s = trace.steps[t];
        w.field(t).field(s.theta);
        for (Eigen::Index i = 0; i < n; ++i) {
            w.field(s.state_pred(i));
        }
        for (const SymMatrix* m : {&s.nominal_cov, &s.distorted_cov}) {
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = i; j < n; ++j) {
                    w.field((*m)(i, j));
                }
            }
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < p; ++j) {
                w.field(s.gain(i, j));
            }
        }
        w.end_row();
    }
}

} // namespace rkf::csv
