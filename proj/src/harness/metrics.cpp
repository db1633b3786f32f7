#include "vrgq/harness/metrics.hpp"

#include "vrgq/numfmt.hpp"
#include "vrgq/types.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace vrgq::harness {

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

void write_csv(std::ostream& os, const MetricsTable& table) {
    os << kMetricsHeader << '\n';
    for (const auto& r : table) {
        os << r.algo << ',' << r.seed << ',' << r.epoch << ',' << r.iter << ',' << r.g_evals << ','
           << format_double(r.grad_norm_sq) << ',' << format_double(r.min_grad_norm_sq) << ','
           << format_double(r.mspbe) << ',' << opt(r.var_estimate) << ',' << opt(r.reward_estimate) << '\n';
    }
}

MetricsTable read_csv(std::istream& is) {
    static const std::vector<std::string> columns = split_fields(kMetricsHeader);
    std::string line;
    if (!std::getline(is, line)) throw ParameterError("csv: missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_fields(line);
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i >= header.size()) throw ParameterError("csv: missing column '" + columns[i] + "'");
        if (header[i] != columns[i])
            throw ParameterError("csv: expected column '" + columns[i] + "', found '" + header[i] + "'");
    }
    if (header.size() != columns.size()) throw ParameterError("csv: unexpected extra columns");

    MetricsTable table;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != columns.size())
            throw ParameterError("csv: line " + std::to_string(lineno) + " has " + std::to_string(f.size()) +
                                 " fields");
        try {
            MetricsRow r;
            r.algo = f[0];
            r.seed = static_cast<std::uint64_t>(parse_int(f[1]));
            r.epoch = parse_int(f[2]);
            r.iter = parse_int(f[3]);
            r.g_evals = parse_int(f[4]);
            r.grad_norm_sq = parse_double(f[5]);
            r.min_grad_norm_sq = parse_double(f[6]);
            r.mspbe = parse_double(f[7]);
            if (!f[8].empty()) r.var_estimate = parse_double(f[8]);
            if (!f[9].empty()) r.reward_estimate = parse_double(f[9]);
            table.push_back(std::move(r));
        } catch (const ParameterError& e) {
            throw ParameterError("csv: line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return table;
}

MetricsTable select_run(const MetricsTable& table, const std::string& algo, std::uint64_t seed) {
    MetricsTable out;
    std::copy_if(table.begin(), table.end(), std::back_inserter(out),
                 [&](const MetricsRow& r) { return r.algo == algo && r.seed == seed; });
    return out;
}

std::string check_invariants(const MetricsTable& table) {
    struct GroupState {
        std::string algo;
        std::uint64_t seed;
        double running_min;
        std::int64_t last_g;
    };
    std::vector<GroupState> groups;
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& r = table[i];
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const GroupState& g) { return g.algo == r.algo && g.seed == r.seed; });
        if (it == groups.end()) {
            groups.push_back({r.algo, r.seed, r.grad_norm_sq, r.g_evals});
            if (r.min_grad_norm_sq != r.grad_norm_sq) return "row " + std::to_string(i) + ": min does not start at first value";
            continue;
        }
        if (r.g_evals <= it->last_g) return "row " + std::to_string(i) + ": g_evals not strictly increasing";
        it->last_g = r.g_evals;
        it->running_min = std::min(it->running_min, r.grad_norm_sq);
        if (r.min_grad_norm_sq != it->running_min) return "row " + std::to_string(i) + ": min_grad_norm_sq is not the running minimum";
    }
    return {};
}

double asymptotic_error(const MetricsTable& run, std::size_t tail) {
    if (tail == 0) throw ParameterError("asymptotic_error: tail must be >= 1");
    if (run.size() < tail) throw ParameterError("asymptotic_error: run shorter than tail");
    double sum = 0.0;
    for (auto it = run.end() - static_cast<std::ptrdiff_t>(tail); it != run.end(); ++it) sum += it->grad_norm_sq;
    return sum / static_cast<double>(tail);
}

double nearest_rank(std::vector<double> values, double p) {
    if (values.empty()) throw ParameterError("nearest_rank: empty sample");
    if (!(p > 0.0 && p <= 100.0)) throw ParameterError("nearest_rank: p must lie in (0, 100]");
    const auto n = values.size();
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n) - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, n);
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
    return values[rank - 1];
}

namespace {

double interpolate(const Curve& c, double x) {
    const auto it = std::lower_bound(c.x.begin(), c.x.end(), x);
    if (it == c.x.end()) return c.y.back();
    const auto j = static_cast<std::size_t>(it - c.x.begin());
    if (*it == x || j == 0) return c.y[j];
    const double x0 = c.x[j - 1];
    const double x1 = c.x[j];
    const double w = (x - x0) / (x1 - x0);
    return c.y[j - 1] + w * (c.y[j] - c.y[j - 1]);
}

} // namespace

std::vector<EnvelopeRow> envelope_stats(const std::vector<Curve>& curves) {
    if (curves.empty()) throw ParameterError("envelope_stats: no curves");
    double lo = -HUGE_VAL;
    double hi = HUGE_VAL;
    for (const auto& c : curves) {
        if (c.x.empty() || c.x.size() != c.y.size()) throw ParameterError("envelope_stats: malformed curve");
        lo = std::max(lo, c.x.front());
        hi = std::min(hi, c.x.back());
    }
    std::vector<EnvelopeRow> out;
    std::vector<double> column(curves.size());
    for (double x : curves.front().x) {
        if (x < lo || x > hi) continue;
        for (std::size_t k = 0; k < curves.size(); ++k) column[k] = interpolate(curves[k], x);
        out.push_back({x, nearest_rank(column, 5.0), nearest_rank(column, 50.0), nearest_rank(column, 95.0)});
    }
    return out;
}

} // namespace vrgq::harness
