#pragma once

// CSV formats: arrivals (cycle_index,timestamp), counts (header of segment indices),
// staffing profile (segment_start,n), delay (probe_time,probability), staffing decisions.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "taylorstaff/arrivals.hpp"
#include "taylorstaff/errors.hpp"
#include "taylorstaff/estimation.hpp"
#include "taylorstaff/queue_sim.hpp"
#include "taylorstaff/staffing.hpp"

namespace taylorstaff::io {

inline std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// Shortest representation that reads back to the same double.
inline std::string general(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, p) : std::string("nan");
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    for (auto& s : out) {
        const auto a = s.find_first_not_of(" \t");
        const auto b = s.find_last_not_of(" \t");
        s = a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    }
    return out;
}

inline double parse_double(const std::string& s, std::size_t row, std::size_t col) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) throw ParseError(row, col, "expected a number, got '" + s + "'");
    return v;
}

inline std::int64_t parse_int(const std::string& s, std::size_t row, std::size_t col) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) throw ParseError(row, col, "expected an integer, got '" + s + "'");
    return v;
}

// Reads non-empty lines; row numbers are 1-based file lines.
inline std::vector<std::pair<std::size_t, std::vector<std::string>>> read_rows(std::istream& in) {
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        rows.emplace_back(row, split_line(line));
    }
    return rows;
}

inline void expect_header(const std::vector<std::pair<std::size_t, std::vector<std::string>>>& rows,
                          const std::vector<std::string>& header) {
    if (rows.empty()) throw ParseError(1, 1, "missing header");
    const auto& [row, cells] = rows.front();
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c >= cells.size() || cells[c] != header[c]) throw ParseError(row, c + 1, "expected header column '" + header[c] + "'");
    if (cells.size() != header.size()) throw ParseError(row, header.size() + 1, "unexpected extra header column");
}

// ---- arrivals ----

inline void write_arrivals(std::ostream& out, const std::vector<ArrivalPath>& cycles, std::size_t first_index = 0) {
    out << "cycle_index,timestamp\n";
    for (std::size_t j = 0; j < cycles.size(); ++j)
        for (double t : cycles[j].timestamps) out << (first_index + j) << ',' << fixed(t, 9) << '\n';
}

struct ArrivalTable {
    std::map<std::int64_t, std::vector<double>> cycles;
};

inline ArrivalTable read_arrivals(std::istream& in) {
    auto rows = read_rows(in);
    expect_header(rows, {"cycle_index", "timestamp"});
    ArrivalTable t;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& [row, cells] = rows[r];
        if (cells.size() != 2) throw ParseError(row, std::min<std::size_t>(cells.size(), 2) + 1, "expected 2 columns");
        const auto c = parse_int(cells[0], row, 1);
        if (c < 0) throw ParseError(row, 1, "cycle index must be >= 0");
        const double ts = parse_double(cells[1], row, 2);
        if (ts < 0.0) throw ParseError(row, 2, "timestamp must be >= 0");
        auto& v = t.cycles[c];
        if (!v.empty() && ts < v.back()) throw ParseError(row, 2, "timestamps must be sorted within a cycle");
        v.push_back(ts);
    }
    return t;
}

// ---- counts ----

inline void write_counts(std::ostream& out, const CountMatrix& cm) {
    for (std::size_t i = 0; i < cm.k; ++i) out << (i ? "," : "") << i;
    out << '\n';
    for (std::size_t j = 0; j < cm.m; ++j) {
        for (std::size_t i = 0; i < cm.k; ++i) out << (i ? "," : "") << cm.at(j, i);
        out << '\n';
    }
}

inline CountMatrix read_counts(std::istream& in, double delta) {
    require(delta > 0.0, "delta must be > 0");
    auto rows = read_rows(in);
    if (rows.empty()) throw ParseError(1, 1, "missing header");
    const auto& header = rows.front().second;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] != std::to_string(i)) throw ParseError(rows.front().first, i + 1, "header must list segment indices 0..k-1");
    const std::size_t k = header.size();
    CountMatrix cm(rows.size() - 1, k, delta);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& [row, cells] = rows[r];
        if (cells.size() != k) throw ParseError(row, std::min(cells.size(), k) + 1, "expected " + std::to_string(k) + " columns");
        for (std::size_t i = 0; i < k; ++i) {
            const auto v = parse_int(cells[i], row, i + 1);
            if (v < 0) throw ParseError(row, i + 1, "counts must be >= 0");
            cm.at(r - 1, i) = v;
        }
    }
    return cm;
}

// ---- staffing profile ----

inline void write_profile(std::ostream& out, const StaffingProfile& p) {
    out << "segment_start,n\n";
    for (std::size_t i = 0; i < p.starts.size(); ++i) out << fixed(p.starts[i], 9) << ',' << p.levels[i] << '\n';
}

inline StaffingProfile read_profile(std::istream& in, double period = 0.0) {
    auto rows = read_rows(in);
    expect_header(rows, {"segment_start", "n"});
    StaffingProfile p;
    p.starts.clear();
    p.levels.clear();
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& [row, cells] = rows[r];
        if (cells.size() != 2) throw ParseError(row, std::min<std::size_t>(cells.size(), 2) + 1, "expected 2 columns");
        p.starts.push_back(parse_double(cells[0], row, 1));
        const auto n = parse_int(cells[1], row, 2);
        if (n < 0) throw ParseError(row, 2, "staffing level must be >= 0");
        p.levels.push_back(static_cast<int>(n));
    }
    if (p.starts.empty()) throw ParseError(rows.front().first + 1, 1, "profile has no rows");
    p.period = period;
    p.validate();
    return p;
}

// ---- delay estimates ----

inline void write_delay(std::ostream& out, const DelayEstimate& d) {
    out << "probe_time,probability\n";
    for (std::size_t i = 0; i < d.probe_times.size(); ++i)
        out << fixed(d.probe_times[i], 9) << ',' << fixed(d.probabilities[i], 6) << '\n';
}

inline DelayEstimate read_delay(std::istream& in) {
    auto rows = read_rows(in);
    expect_header(rows, {"probe_time", "probability"});
    DelayEstimate d;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& [row, cells] = rows[r];
        if (cells.size() != 2) throw ParseError(row, std::min<std::size_t>(cells.size(), 2) + 1, "expected 2 columns");
        d.probe_times.push_back(parse_double(cells[0], row, 1));
        const double p = parse_double(cells[1], row, 2);
        if (p < 0.0 || p > 1.0) throw ParseError(row, 2, "probability outside [0, 1]");
        d.probabilities.push_back(p);
    }
    return d;
}

// ---- queue paths ----

inline void write_queue_path(std::ostream& out, const QueuePath& q) {
    out << "time,number_in_system\n";
    for (std::size_t i = 0; i < q.times.size(); ++i) out << fixed(q.times[i], 9) << ',' << q.values[i] << '\n';
}

// ---- staffing decisions ----

inline const char* decision_header() { return "rule,lambda,epsilon,base,safety,n,delta_star"; }

inline std::string decision_row(const StaffingDecision& d) {
    std::string s = d.rule + ',' + general(d.lambda) + ',' + general(d.epsilon) + ',' + general(d.base) + ',' +
                    general(d.safety) + ',' + std::to_string(d.n) + ',';
    if (d.delta_star) s += general(*d.delta_star);
    return s;
}

inline void write_decisions(std::ostream& out, const std::vector<StaffingDecision>& ds) {
    out << decision_header() << '\n';
    for (const auto& d : ds) out << decision_row(d) << '\n';
}

inline std::vector<StaffingDecision> read_decisions(std::istream& in) {
    auto rows = read_rows(in);
    expect_header(rows, {"rule", "lambda", "epsilon", "base", "safety", "n", "delta_star"});
    std::vector<StaffingDecision> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& [row, cells] = rows[r];
        if (cells.size() != 7) throw ParseError(row, std::min<std::size_t>(cells.size(), 7) + 1, "expected 7 columns");
        StaffingDecision d;
        d.rule = cells[0];
        d.lambda = parse_double(cells[1], row, 2);
        d.epsilon = parse_double(cells[2], row, 3);
        d.base = parse_double(cells[3], row, 4);
        d.safety = parse_double(cells[4], row, 5);
        d.n = static_cast<int>(parse_int(cells[5], row, 6));
        if (!cells[6].empty()) d.delta_star = parse_double(cells[6], row, 7);
        out.push_back(d);
    }
    return out;
}

// ---- fit results ----

inline const char* fit_header() { return "model,log_likelihood,aic,bic,q,m,converged,jittered,params"; }

inline std::string fit_row(const FitResult& f) {
    std::string params;
    for (const auto& [k, v] : f.params) params += (params.empty() ? "" : ";") + k + "=" + general(v);
    return to_string(f.model) + ',' + general(f.log_likelihood) + ',' + general(f.aic) + ',' + general(f.bic) + ',' +
           std::to_string(f.q) + ',' + std::to_string(f.m) + ',' + (f.converged ? "1" : "0") + ',' +
           (f.jittered ? "1" : "0") + ',' + params;
}

inline void write_fit_report(std::ostream& out, const FitResult& f) {
    out << "model = " << to_string(f.model) << '\n';
    for (const auto& [k, v] : f.params) out << k << " = " << fixed(v, 6) << '\n';
    if (!f.rates.empty()) out << "rates = " << f.rates.size() << " fixed segment rates\n";
    out << "log_likelihood = " << fixed(f.log_likelihood, 6) << '\n'
        << "aic = " << fixed(f.aic, 6) << '\n'
        << "bic = " << fixed(f.bic, 6) << '\n'
        << "q = " << f.q << '\n'
        << "m = " << f.m << '\n'
        << "evaluations = " << f.evaluations << '\n'
        << "converged = " << (f.converged ? "true" : "false") << '\n'
        << "jittered = " << (f.jittered ? "true" : "false") << '\n';
    if (!f.note.empty()) out << "note = " << f.note << '\n';
}

}  // namespace taylorstaff::io
