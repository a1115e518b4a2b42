#pragma once

// CSV serialization of traces: one header row, 17 significant digits, so the
// round trip reproduces every binary value exactly.

#include <charconv>
#include <fstream>
#include <sstream>

#include "mrbc/trace.hpp"

namespace mrbc {

inline std::string trace_to_csv(const Trace& trace) {
    std::string out;
    out.reserve(trace.data.size() * 12 + 256);
    for (std::size_t c = 0; c < trace.columns.size(); ++c) {
        if (c) out += ',';
        out += trace.columns[c];
    }
    out += '\n';
    const std::size_t stride = trace.stride();
    for (std::size_t r = 0; r < trace.rows(); ++r) {
        for (std::size_t c = 0; c < stride; ++c) {
            if (c) out += ',';
            out += format_full(trace.data[r * stride + c]);
        }
        out += '\n';
    }
    return out;
}

inline void emit(const Trace& trace, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + path);
    f << trace_to_csv(trace);
}

inline Trace trace_from_csv(const std::string& text) {
    Trace trace;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty trace CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::size_t pos = 0;
    while (pos <= line.size()) {
        const auto comma = line.find(',', pos);
        trace.columns.push_back(comma == std::string::npos ? line.substr(pos)
                                                           : line.substr(pos, comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    trace.n = trace_order(trace.columns);

    const std::size_t stride = trace.columns.size();
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t count = 0, p = 0;
        while (p <= line.size()) {
            const auto comma = line.find(',', p);
            const char* first = line.data() + p;
            const char* last = line.data() + (comma == std::string::npos ? line.size() : comma);
            double v = 0.0;
            const auto res = std::from_chars(first, last, v);
            if (res.ec != std::errc{} || res.ptr != last)
                throw std::runtime_error("trace CSV parse error at line " +
                                         std::to_string(lineno));
            trace.data.push_back(v);
            ++count;
            if (comma == std::string::npos) break;
            p = comma + 1;
        }
        if (count != stride)
            throw std::runtime_error("trace CSV row " + std::to_string(lineno) +
                                     " has " + std::to_string(count) + " fields, expected " +
                                     std::to_string(stride));
    }
    return trace;
}

inline Trace parse_trace_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open trace file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return trace_from_csv(ss.str());
}

}  // namespace mrbc
