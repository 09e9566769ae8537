#include "sparsedae/timeseries.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "sparsedae/errors.hpp"

namespace sparsedae {

namespace {

const char* kModule = "timeseries";

Error err(const std::string& op, const std::string& code, const std::string& msg) {
    return Error(kModule, op, code, msg);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double column_std(const Eigen::VectorXd& col) {
    const Eigen::Index n = col.size();
    if (n < 2) return 0.0;
    const double mean = col.mean();
    const double ss = (col.array() - mean).square().sum();
    return std::sqrt(ss / static_cast<double>(n - 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_number(const std::string& field, const std::string& op) {
    const char* begin = field.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || end != begin + field.size())
        throw err(op, "NonNumericCell", "cannot parse '" + field + "' as a number");
    if (!std::isfinite(v))
        throw err(op, "NonFiniteValue", "non-finite value '" + field + "'");
    return v;
}

// Savitzky-Golay weights: one length-`window` vector per evaluation offset.
// Row j of the design matrix is [1, x, x^2, ...] at x = j - half; the weight
// vector for offset e and derivative d is  r_e^T (A^T A)^{-1} A^T  where
// r_e is the d-th derivative of the monomial row at x = e.
Eigen::MatrixXd savgol_weights(int window, int polyorder, int deriv) {
    const int half = window / 2;
    Eigen::MatrixXd design(window, polyorder + 1);
    for (int j = 0; j < window; ++j) {
        double x = static_cast<double>(j - half);
        double p = 1.0;
        for (int m = 0; m <= polyorder; ++m) {
            design(j, m) = p;
            p *= x;
        }
    }
    Eigen::MatrixXd gram = design.transpose() * design;
    Eigen::LDLT<Eigen::MatrixXd> solver(gram);

    Eigen::MatrixXd weights(window, window);  // column e+half holds offset-e weights
    for (int e = -half; e <= half; ++e) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(polyorder + 1);
        for (int m = deriv; m <= polyorder; ++m) {
            double fact = 1.0;
            for (int k = 0; k < deriv; ++k) fact *= static_cast<double>(m - k);
            row(m) = fact * std::pow(static_cast<double>(e), m - deriv);
        }
        weights.col(e + half) = design * solver.solve(row);
    }
    return weights;
}

std::vector<double> savgol_apply(const std::vector<double>& series, double dt, int window,
                                 int polyorder, int deriv, const std::string& op) {
    if (window <= 0 || window % 2 == 0)
        throw err(op, "EvenWindow", "window must be a positive odd integer");
    if (polyorder < 0 || window <= polyorder)
        throw err(op, "WindowTooSmall", "window must exceed polyorder");
    if (deriv > polyorder)
        throw err(op, "PolyorderTooSmall", "polyorder must be >= derivative order");
    const int n = static_cast<int>(series.size());
    if (n < window) throw err(op, "SeriesTooShort", "series shorter than window");
    if (deriv > 0 && !(dt > 0.0)) throw err(op, "InvalidStep", "dt must be positive");

    const Eigen::MatrixXd weights = savgol_weights(window, polyorder, deriv);
    const int half = window / 2;
    const double scale = deriv == 0 ? 1.0 : 1.0 / std::pow(dt, deriv);

    std::vector<double> out(series.size());
    for (int i = 0; i < n; ++i) {
        int start;  // first sample of the fitting window
        int offset; // evaluation offset relative to the window centre
        if (i < half) {
            start = 0;
            offset = i - half;
        } else if (i >= n - half) {
            start = n - window;
            offset = i - (n - 1 - half);
        } else {
            start = i - half;
            offset = 0;
        }
        const Eigen::VectorXd& w = weights.col(offset + half);
        double acc = 0.0;
        for (int j = 0; j < window; ++j) acc += w(j) * series[start + j];
        out[i] = acc * scale;
    }
    return out;
}

double segment_dt(const TimeSeriesTable& table, Eigen::Index first, Eigen::Index last,
                  const std::string& op) {
    if (last - first < 2) return 0.0;
    const double dt0 = table.times[first + 1] - table.times[first];
    for (Eigen::Index r = first + 1; r + 1 < last; ++r) {
        const double dt = table.times[r + 1] - table.times[r];
        if (std::abs(dt - dt0) > 1e-9 * std::max(std::abs(dt0), 1.0))
            throw err(op, "NonUniformGrid",
                      "segment starting at row " + std::to_string(first) +
                          " is not uniformly sampled");
    }
    return dt0;
}

}  // namespace

int TimeSeriesTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> TimeSeriesTable::segment_ranges() const {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> ranges;
    const Eigen::Index n = rows();
    Eigen::Index first = 0;
    for (Eigen::Index r = 1; r <= n; ++r) {
        if (r == n || segment_ids[r] != segment_ids[first]) {
            ranges.emplace_back(first, r);
            first = r;
        }
    }
    return ranges;
}

void TimeSeriesTable::validate(const std::string& op) const {
    if (static_cast<Eigen::Index>(times.size()) != rows() ||
        static_cast<Eigen::Index>(segment_ids.size()) != rows())
        throw err(op, "ShapeMismatch", "times/segment_ids length must equal row count");
    if (static_cast<Eigen::Index>(names.size()) != cols())
        throw err(op, "ShapeMismatch", "names length must equal column count");
    std::set<std::string> unique(names.begin(), names.end());
    if (unique.size() != names.size())
        throw err(op, "DuplicateName", "state names must be unique");
    for (Eigen::Index r = 1; r < rows(); ++r) {
        if (segment_ids[r] == segment_ids[r - 1] && !(times[r] > times[r - 1]))
            throw err(op, "NonMonotonicTime",
                      "time must strictly increase within a segment (row " + std::to_string(r) +
                          ")");
    }
    if (!values.allFinite()) throw err(op, "NonFiniteValue", "table contains non-finite entries");
}

TimeSeriesTable load_table(std::istream& source) {
    const std::string op = "load_table";
    std::string line;
    if (!std::getline(source, line)) throw err(op, "EmptyFile", "no header row");
    const std::vector<std::string> header = split_csv_line(line);
    if (header.empty() || header[0] != "t")
        throw err(op, "BadHeader", "first column header must be 't'");

    int segment_col = -1;
    std::vector<std::string> names;
    std::vector<int> state_cols;
    for (std::size_t i = 1; i < header.size(); ++i) {
        if (header[i] == "segment") {
            if (segment_col >= 0) throw err(op, "DuplicateName", "repeated 'segment' column");
            segment_col = static_cast<int>(i);
        } else {
            names.push_back(header[i]);
            state_cols.push_back(static_cast<int>(i));
        }
    }
    if (names.empty()) throw err(op, "BadHeader", "no state columns");

    struct Row {
        double t;
        std::int64_t seg;
        std::vector<double> vals;
    };
    std::vector<Row> rows;
    while (std::getline(source, line)) {
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw err(op, "BadRow", "row has " + std::to_string(fields.size()) + " fields, header has " +
                                        std::to_string(header.size()));
        Row row;
        row.t = parse_number(fields[0], op);
        row.seg = 0;
        if (segment_col >= 0) {
            const double s = parse_number(fields[segment_col], op);
            row.seg = static_cast<std::int64_t>(std::llround(s));
            if (std::abs(s - static_cast<double>(row.seg)) > 1e-9)
                throw err(op, "NonNumericCell", "segment id must be an integer");
        }
        row.vals.reserve(state_cols.size());
        for (int c : state_cols) row.vals.push_back(parse_number(fields[c], op));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw err(op, "EmptyFile", "no data rows");

    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.seg != b.seg ? a.seg < b.seg : a.t < b.t;
    });

    TimeSeriesTable table;
    table.names = names;
    table.times.resize(rows.size());
    table.segment_ids.resize(rows.size());
    table.values.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(names.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        table.times[r] = rows[r].t;
        table.segment_ids[r] = rows[r].seg;
        for (std::size_t c = 0; c < names.size(); ++c)
            table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                rows[r].vals[c];
    }
    table.validate(op);
    return table;
}

TimeSeriesTable load_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw err("load_table", "FileNotFound", "cannot open '" + path + "'");
    return load_table(in);
}

void write_table(const TimeSeriesTable& table, std::ostream& out) {
    table.validate("write_table");
    char buf[64];
    out << "t,segment";
    for (const auto& n : table.names) out << ',' << n;
    out << '\n';
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
        std::snprintf(buf, sizeof(buf), "%.17g", table.times[r]);
        out << buf << ',' << table.segment_ids[r];
        for (Eigen::Index c = 0; c < table.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", table.values(r, c));
            out << ',' << buf;
        }
        out << '\n';
    }
}

void write_table_file(const TimeSeriesTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw err("write_table", "FileNotFound", "cannot open '" + path + "' for writing");
    write_table(table, out);
}

TimeSeriesTable inject_noise(const TimeSeriesTable& table, double pct, std::uint64_t seed) {
    const std::string op = "inject_noise";
    table.validate(op);
    if (pct < 0.0) throw err(op, "NegativePct", "noise percentage must be >= 0");
    TimeSeriesTable noisy = table;
    if (pct == 0.0) return noisy;
    for (Eigen::Index c = 0; c < table.cols(); ++c) {
        const double sigma = column_std(table.values.col(c));
        std::mt19937_64 rng(splitmix64(seed ^ fnv1a(table.names[c])));
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (Eigen::Index r = 0; r < table.rows(); ++r)
            noisy.values(r, c) += pct * sigma * gauss(rng);
    }
    return noisy;
}

std::vector<double> smooth_savgol(const std::vector<double>& series, double dt, int window,
                                  int polyorder) {
    return savgol_apply(series, dt, window, polyorder, 0, "smooth_savgol");
}

std::vector<double> estimate_derivative(const std::vector<double>& series, double dt, int order,
                                        int window, int polyorder) {
    if (order != 1 && order != 2)
        throw err("estimate_derivative", "BadOrder", "derivative order must be 1 or 2");
    return savgol_apply(series, dt, window, polyorder, order, "estimate_derivative");
}

TimeSeriesTable smooth_table(const TimeSeriesTable& table, int window, int polyorder) {
    const std::string op = "smooth_table";
    table.validate(op);
    TimeSeriesTable out = table;
    for (const auto& [first, last] : table.segment_ranges()) {
        const double dt = segment_dt(table, first, last, op);
        const auto n = static_cast<std::size_t>(last - first);
        std::vector<double> col(n);
        for (Eigen::Index c = 0; c < table.cols(); ++c) {
            for (std::size_t i = 0; i < n; ++i) col[i] = table.values(first + static_cast<Eigen::Index>(i), c);
            const std::vector<double> smoothed = smooth_savgol(col, dt, window, polyorder);
            for (std::size_t i = 0; i < n; ++i) out.values(first + static_cast<Eigen::Index>(i), c) = smoothed[i];
        }
    }
    return out;
}

DerivativeTable derivative_table(const TimeSeriesTable& table, int order, int window,
                                 int polyorder) {
    const std::string op = "derivative_table";
    table.validate(op);
    DerivativeTable result;
    result.table = table;
    result.order = order;
    result.method = "savgol(w=" + std::to_string(window) + ",p=" + std::to_string(polyorder) + ")";
    for (const auto& [first, last] : table.segment_ranges()) {
        const double dt = segment_dt(table, first, last, op);
        const auto n = static_cast<std::size_t>(last - first);
        std::vector<double> col(n);
        for (Eigen::Index c = 0; c < table.cols(); ++c) {
            for (std::size_t i = 0; i < n; ++i) col[i] = table.values(first + static_cast<Eigen::Index>(i), c);
            const std::vector<double> deriv = estimate_derivative(col, dt, order, window, polyorder);
            for (std::size_t i = 0; i < n; ++i)
                result.table.values(first + static_cast<Eigen::Index>(i), c) = deriv[i];
        }
    }
    return result;
}

}  // namespace sparsedae
