#pragma once

// Time-indexed record of every closed-loop signal needed to re-evaluate the
// stability monitors offline. Row-major storage, fixed column schema per run.

#include <string>

#include "mrbc/types.hpp"

namespace mrbc {

struct Trace {
    int n = 0;
    std::vector<std::string> columns;
    std::vector<double> data;  // row-major, stride = columns.size()

    // Derivative-filter memory per record (subsystems 2..n). Part of the
    // record so any controller evaluation can be reproduced exactly; not part
    // of the serialized schema.
    std::vector<double> filter_memory;

    [[nodiscard]] std::size_t rows() const {
        return columns.empty() ? 0 : data.size() / columns.size();
    }
    [[nodiscard]] std::size_t stride() const { return columns.size(); }

    [[nodiscard]] double at(std::size_t row, std::size_t col) const {
        return data[row * stride() + col];
    }

    [[nodiscard]] int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        return -1;
    }

    [[nodiscard]] double value(std::size_t row, const std::string& name) const {
        const int c = column_index(name);
        if (c < 0) throw std::out_of_range("trace has no column '" + name + "'");
        return at(row, static_cast<std::size_t>(c));
    }

    /// Extracts one column as a vector.
    [[nodiscard]] Vec column(const std::string& name) const {
        const int c = column_index(name);
        if (c < 0) throw std::out_of_range("trace has no column '" + name + "'");
        Vec out(rows());
        for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, static_cast<std::size_t>(c));
        return out;
    }

    [[nodiscard]] double filter_at(std::size_t row, int subsystem) const {
        // subsystem in 2..n
        const std::size_t width = static_cast<std::size_t>(n - 1);
        return filter_memory[row * width + static_cast<std::size_t>(subsystem - 2)];
    }
};

/// The serialized column schema, in fixed order.
inline std::vector<std::string> trace_columns(int n) {
    std::vector<std::string> cols;
    auto group = [&cols, n](const std::string& base) {
        for (int i = 1; i <= n; ++i) cols.push_back(base + std::to_string(i));
    };
    cols.emplace_back("t");
    group("x");
    group("xhat");
    group("e");
    group("ebar");
    group("xd");
    cols.emplace_back("u_raw");
    cols.emplace_back("u_sat");
    cols.emplace_back("delta_u");
    cols.emplace_back("F_L");
    group("o");
    group("Q");
    group("psi");
    group("theta");
    group("fstar");
    group("fbar");
    group("dstar");
    group("gamma");
    return cols;
}

/// Infers the system order from a schema produced by trace_columns().
inline int trace_order(const std::vector<std::string>& columns) {
    int n = 0;
    for (const auto& c : columns)
        if (c.size() > 1 && c[0] == 'x' && c.find("hat") == std::string::npos &&
            c[1] >= '1' && c[1] <= '9' && c.find('d') == std::string::npos)
            ++n;
    return n;
}

}  // namespace mrbc
