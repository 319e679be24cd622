#pragma once

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "expmem/errors.hpp"
#include "expmem/kernel.hpp"

namespace expmem {

// Plain-text coefficient format:
//   line 1:        m gamma1 gamma2
//   lines 2..m+1:  a_i b_i
// Blank lines and lines starting with '#' are skipped.  Numbers are written
// with 17 significant digits so that load(save(k)) reproduces every double
// bit-exactly.

namespace detail {

inline bool is_blank_or_comment(const std::string& line) {
    for (char c : line) {
        if (c == '#') return true;
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

inline std::string format_coeff(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.16e", x);
    return buf;
}

}  // namespace detail

inline ExpSumKernel parse_coefficients(std::istream& in, const std::string& origin = "<stream>") {
    std::string line;
    int lineno = 0;
    auto next_content_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++lineno;
            if (!detail::is_blank_or_comment(line)) return true;
        }
        return false;
    };

    if (!next_content_line()) throw ParseError(origin + ": missing header line", lineno);

    long m = 0;
    double gamma1 = 0.0, gamma2 = 0.0;
    {
        std::istringstream ls(line);
        std::string extra;
        if (!(ls >> m >> gamma1 >> gamma2) || (ls >> extra))
            throw ParseError(origin + ": header must be `m gamma1 gamma2`", lineno);
        if (m < 0) throw ParseError(origin + ": term count m must be >= 0", lineno);
    }

    std::vector<ExpTerm> terms;
    terms.reserve(static_cast<std::size_t>(m));
    for (long i = 0; i < m; ++i) {
        if (!next_content_line())
            throw ParseError(origin + ": expected " + std::to_string(m) + " term lines, got " + std::to_string(i),
                             lineno);
        std::istringstream ls(line);
        ExpTerm term{};
        std::string extra;
        if (!(ls >> term.weight >> term.rate) || (ls >> extra))
            throw ParseError(origin + ": term line must be `a_i b_i`", lineno);
        terms.push_back(term);
    }
    if (next_content_line()) throw ParseError(origin + ": trailing content after last term", lineno);

    try {
        return ExpSumKernel(gamma1, gamma2, std::move(terms));
    } catch (const InvariantError& e) {
        throw ParseError(origin + ": " + e.what(), lineno);
    }
}

inline ExpSumKernel load_coefficients(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open coefficient file " + path.string(), 0);
    return parse_coefficients(in, path.filename().string());
}

inline std::string format_coefficients(const ExpSumKernel& kern) {
    std::ostringstream out;
    out << kern.size() << ' ' << detail::format_coeff(kern.gamma1()) << ' ' << detail::format_coeff(kern.gamma2())
        << '\n';
    for (const ExpTerm& term : kern.terms())
        out << detail::format_coeff(term.weight) << ' ' << detail::format_coeff(term.rate) << '\n';
    return out.str();
}

// Writes to a sibling temp file, then renames over the target, so readers
// never observe a half-written file.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    namespace fs = std::filesystem;
    fs::path dir = path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << text;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("rename " + tmp.string() + " -> " + path.string() + " failed: " + ec.message());
    }
}

inline void save_coefficients(const ExpSumKernel& kern, const std::filesystem::path& path) {
    write_text_atomic(path, format_coefficients(kern));
}

}  // namespace expmem
