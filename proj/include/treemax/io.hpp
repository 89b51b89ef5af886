#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treemax/errors.hpp"
#include "treemax/lorentz.hpp"
#include "treemax/numerics.hpp"
#include "treemax/tree_geometry.hpp"
#include "treemax/version.hpp"

namespace treemax {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Value formatting. All real-valued table cells go through format_scientific
// so that byte-identical output is a property of the values, not of locale or
// stream state: 15 significant digits, two-digit exponent, 'e' separator.

inline std::string format_scientific(const Real& v) {
    if (is_inf(v)) return v < 0 ? "-inf" : "inf";
    if (v == 0) return "0.00000000000000e+00";

    // precision counts fractional digits in scientific mode, so 14 yields 15
    // significant digits, correctly rounded by mpfr
    std::string raw = v.str(14, std::ios_base::scientific);
    auto        epos = raw.find('e');
    if (epos == std::string::npos) throw io_error("format_scientific: unexpected format " + raw);
    std::string mant = raw.substr(0, epos);
    long        expo = std::stol(raw.substr(epos + 1));

    // mpfr may emit a bare "-1e-05" style mantissa for exact powers; normalize
    // to d.dddddddddddddd with exactly 14 fractional digits
    bool neg = false;
    if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) {
        neg  = mant[0] == '-';
        mant = mant.substr(1);
    }
    auto dot = mant.find('.');
    std::string digits = dot == std::string::npos ? mant : mant.substr(0, dot) + mant.substr(dot + 1);
    while (digits.size() < 15) digits += '0';
    digits = digits.substr(0, 15);

    std::ostringstream out;
    if (neg) out << '-';
    out << digits[0] << '.' << digits.substr(1) << 'e' << (expo < 0 ? '-' : '+');
    long a = expo < 0 ? -expo : expo;
    if (a < 10) out << '0';
    out << a;
    return out.str();
}

inline std::string format_value(const LogScalar& v) { return format_scientific(v.to_real()); }

inline std::string format_norm_value(const NormResult& r) {
    return r.divergent ? "inf" : format_value(r.value);
}

// ---------------------------------------------------------------------------
// Vertex addresses as text: the root prints as "o", everything else as the
// slash-joined branch path from the root, e.g. "2/0/1".

inline std::string vertex_to_string(const VertexAddress& v) {
    if (v.is_root()) return "o";
    std::ostringstream out;
    const auto& p = v.path();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) out << '/';
        out << p[i];
    }
    return out.str();
}

inline VertexAddress parse_vertex(const TreeParams& tp, const std::string& text) {
    if (text.empty() || text == "o") return VertexAddress(tp);
    std::vector<int> path;
    std::size_t      pos = 0;
    while (pos <= text.size()) {
        auto next = text.find('/', pos);
        std::string tok = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        if (tok.empty()) throw parameter_error("parse_vertex: empty path component in '" + text + "'");
        for (char c : tok)
            if (c < '0' || c > '9')
                throw parameter_error("parse_vertex: bad path component '" + tok + "'");
        path.push_back(std::stoi(tok));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return VertexAddress(tp, std::move(path)); // ctor validates branch bounds
}

// ---------------------------------------------------------------------------
// CSV plumbing. Minimal quoting: only cells containing a comma, quote or
// newline are quoted (citation strings contain commas).

inline std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string csv_line(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(cells[i]);
    }
    out += '\n';
    return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw io_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string              cur;
    bool                     quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else
                    quoted = false;
            } else
                cur += c;
        } else if (c == '"')
            quoted = true;
        else if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r')
            cur += c;
    }
    cells.push_back(cur);
    return cells;
}

inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::istringstream                    in(read_text_file(path));
    std::vector<std::vector<std::string>> rows;
    std::string                           line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        rows.push_back(split_csv_line(line));
    }
    return rows;
}

} // namespace detail

// Radial table file: header "norm,value", then one row per populated norm.
// Norms may be sparse and unordered; unlisted norms up to the maximum are 0.
inline RadialFunction read_radial_csv(const TreeParams& tp, const std::string& path) {
    auto rows = detail::read_csv(path);
    if (rows.empty()) throw io_error("empty radial table: " + path);
    std::size_t first = 0;
    if (rows[0].size() >= 2 && rows[0][0] == "norm") first = 1;
    long max_norm = -1;
    std::vector<std::pair<long, Real>> entries;
    for (std::size_t i = first; i < rows.size(); ++i) {
        if (rows[i].size() < 2)
            throw io_error("radial table row needs norm,value: " + path);
        long n = std::stol(rows[i][0]);
        if (n < 0) throw io_error("negative norm in radial table: " + path);
        entries.emplace_back(n, Real(rows[i][1]));
        max_norm = std::max(max_norm, n);
    }
    std::vector<LogScalar> vals(static_cast<std::size_t>(max_norm) + 1, LogScalar::zero(tp.k));
    for (auto& [n, v] : entries) vals[static_cast<std::size_t>(n)] = LogScalar::from_real(tp.k, v);
    return RadialFunction(tp, std::move(vals));
}

// Finite function file: header "vertex,value", vertex per vertex_to_string.
inline FiniteFunction read_finite_csv(const TreeParams& tp, const std::string& path) {
    auto rows = detail::read_csv(path);
    if (rows.empty()) throw io_error("empty function table: " + path);
    std::size_t first = 0;
    if (rows[0].size() >= 2 && rows[0][0] == "vertex") first = 1;
    FiniteFunction f(tp);
    for (std::size_t i = first; i < rows.size(); ++i) {
        if (rows[i].size() < 2)
            throw io_error("function table row needs vertex,value: " + path);
        f.set(parse_vertex(tp, rows[i][0]), LogScalar::from_real(tp.k, Real(rows[i][1])));
    }
    return f;
}

// ---------------------------------------------------------------------------
// Experiment reports: one CSV table plus a JSON envelope with the citation of
// the claim being probed and the named pass/fail checks.

struct ExperimentReport {
    std::string                           experiment;
    ordered_json                          params = ordered_json::object();
    std::string                           citation;
    std::vector<std::string>              columns;
    std::vector<std::vector<std::string>> rows;
    ordered_json                          verdicts = ordered_json::object();
    std::uint64_t                         seed     = 0;
};

inline std::string to_csv(const ExperimentReport& r) {
    std::string out = csv_line(r.columns);
    for (const auto& row : r.rows) out += csv_line(row);
    return out;
}

inline ordered_json to_json(const ExperimentReport& r) {
    ordered_json j;
    j["experiment"] = r.experiment;
    j["params"]     = r.params;
    j["citation"]   = r.citation;
    ordered_json rows = ordered_json::array();
    for (const auto& row : r.rows) {
        ordered_json obj = ordered_json::object();
        for (std::size_t c = 0; c < r.columns.size() && c < row.size(); ++c)
            obj[r.columns[c]] = row[c];
        rows.push_back(std::move(obj));
    }
    j["rows"]     = std::move(rows);
    j["verdicts"] = r.verdicts;
    j["seed"]     = r.seed;
    j["version"]  = version();
    return j;
}

inline std::string to_json_string(const ExperimentReport& r) { return to_json(r).dump(2) + "\n"; }

} // namespace treemax
