#pragma once

#include "snse/errors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace snse::csv {

// Fixed formatting contract: '.' decimal separator, LF endings, one header
// row after the config-hash comment line. Bodies are byte-stable for a
// given config and seed.

inline std::string cell(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", x);
    return buf;
}

inline std::string cell(int x) { return std::to_string(x); }
inline std::string cell(long x) { return std::to_string(x); }
inline std::string cell(long long x) { return std::to_string(x); }
inline std::string cell(std::size_t x) { return std::to_string(x); }
inline std::string cell(const char* x) { return x; }
inline std::string cell(const std::string& x) { return x; }

class Table {
public:
    explicit Table(const std::string& config_hash) {
        body_ = "# config_hash=" + config_hash + "\n";
    }

    void header(std::initializer_list<const char*> cols) { append_cells(cols.begin(), cols.end()); }

    template <typename... Cells>
    void row(const Cells&... cells) {
        std::vector<std::string> formatted{cell(cells)...};
        append_cells(formatted.begin(), formatted.end());
    }

    const std::string& body() const { return body_; }

    void write(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
        out << body_;
        if (!out.good()) throw IoError("failed writing '" + path.string() + "'");
    }

private:
    template <typename It>
    void append_cells(It first, It last) {
        bool leading = true;
        for (It it = first; it != last; ++it) {
            if (!leading) body_ += ',';
            body_ += cell(*it);
            leading = false;
        }
        body_ += '\n';
    }

    std::string body_;
};

} // namespace snse::csv
