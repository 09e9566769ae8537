#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sparsedae {

/// Sampled multivariate state trajectories. Rows are samples, columns are
/// named states. `segment_ids[r]` tags which trajectory (initial condition)
/// row r belongs to; time is strictly increasing within each segment and
/// rows are stored sorted by (segment, time).
struct TimeSeriesTable {
    std::vector<double> times;
    std::vector<std::string> names;
    Eigen::MatrixXd values;              // N x d
    std::vector<std::int64_t> segment_ids;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }

    int column_index(const std::string& name) const;  // -1 when absent

    /// Half-open row ranges [first, last) of the contiguous segments.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> segment_ranges() const;

    void validate(const std::string& op) const;
};

/// Derivatives of a table, same shape and naming as the source.
struct DerivativeTable {
    TimeSeriesTable table;
    int order = 1;           // 1 or 2
    std::string method;      // smoothing descriptor, e.g. "savgol(w=21,p=3)"
};

/// Parse CSV text. First header must be "t"; a column named "segment" (any
/// position) carries integer segment ids; remaining headers are state names.
/// Rows are sorted by (segment, time) on return.
TimeSeriesTable load_table(std::istream& source);
TimeSeriesTable load_table_file(const std::string& path);

/// Serialize with enough digits that load_table(write_table(t)) reproduces
/// the values bit-identically.
void write_table(const TimeSeriesTable& table, std::ostream& out);
void write_table_file(const TimeSeriesTable& table, const std::string& path);

/// Add pct * std(column) * N(0,1) noise to every column independently.
/// The per-column generator is seeded from (seed, column name), so identical
/// (seed, name) pairs always receive the identical noise stream.
TimeSeriesTable inject_noise(const TimeSeriesTable& table, double pct, std::uint64_t seed);

/// Savitzky-Golay smoothing of a uniformly sampled series: least-squares
/// polynomial of degree `polyorder` over a window of `window` samples,
/// evaluated at the window centre. Near the boundaries the full window is
/// anchored at the edge and the polynomial is evaluated off-centre, so the
/// output has the same length as the input.
std::vector<double> smooth_savgol(const std::vector<double>& series, double dt, int window,
                                  int polyorder);

/// Derivative (order 1 or 2) of the local Savitzky-Golay polynomial fit.
std::vector<double> estimate_derivative(const std::vector<double>& series, double dt, int order,
                                        int window, int polyorder);

/// Table-level helpers. Each segment is smoothed/differentiated on its own;
/// segments must be uniformly sampled (error NonUniformGrid otherwise).
TimeSeriesTable smooth_table(const TimeSeriesTable& table, int window, int polyorder);
DerivativeTable derivative_table(const TimeSeriesTable& table, int order, int window,
                                 int polyorder);

}  // namespace sparsedae
