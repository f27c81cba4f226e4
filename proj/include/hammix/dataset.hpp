// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <algorithm>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace hammix {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Category labels of one variable, in order of first appearance; integer
// codes are the label positions.
struct Alphabet {
    std::vector<std::string> labels;

    int m() const { return static_cast<int>(labels.size()); }
    int code_of(const std::string& label) const {
        for (int h = 0; h < m(); ++h)
            if (labels[h] == label) return h;
        return -1;
    }
};

// Immutable integer-coded categorical data matrix (n rows, p variables).
struct CategoricalDataset {
    int n = 0;
    int p = 0;
    std::vector<int> codes;  // row-major, n*p
    std::vector<Alphabet> alphabets;
    std::vector<std::string> variable_names;
    std::vector<std::string> warnings;

    int code(int i, int j) const { return codes[static_cast<size_t>(i) * p + j]; }
    const int* row(int i) const { return codes.data() + static_cast<size_t>(i) * p; }

    std::vector<int> modality_counts() const {
        std::vector<int> m(p);
        for (int j = 0; j < p; ++j) m[j] = alphabets[j].m();
        return m;
    }

    std::vector<std::string> decode_row(int i) const {
        std::vector<std::string> out(p);
        for (int j = 0; j < p; ++j) out[j] = alphabets[j].labels[code(i, j)];
        return out;
    }

    std::string summary() const {
        std::ostringstream os;
        os << "observations: " << n << "\nvariables: " << p << "\n";
        for (int j = 0; j < p; ++j) {
            os << "  " << variable_names[j] << " (m=" << alphabets[j].m() << "):";
            for (const auto& l : alphabets[j].labels) os << ' ' << l;
            os << '\n';
        }
        return os.str();
    }
};

struct LoadOptions {
    char delimiter = ',';
    bool header = true;
};

namespace detail {
inline std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == delim) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}
}  // namespace detail

// Reads delimited text into an integer-coded dataset. Codes are assigned
// per column in order of first appearance. Missing (empty) fields are an
// error: the model has no missing-data mechanism.
inline CategoricalDataset load_dataset(std::istream& in, const LoadOptions& opt = {}) {
    CategoricalDataset ds;
    std::string line;
    long line_no = 0;
    std::vector<std::unordered_map<std::string, int>> code_maps;
    bool expect_header = opt.header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
        auto fields = detail::split_line(line, opt.delimiter);
        if (expect_header) {
            ds.p = static_cast<int>(fields.size());
            ds.variable_names = fields;
            ds.alphabets.resize(ds.p);
            code_maps.resize(ds.p);
            expect_header = false;
            continue;
        }
        if (ds.p == 0) {
            ds.p = static_cast<int>(fields.size());
            ds.alphabets.resize(ds.p);
            code_maps.resize(ds.p);
            ds.variable_names.resize(ds.p);
            for (int j = 0; j < ds.p; ++j) ds.variable_names[j] = "V" + std::to_string(j + 1);
        }
        if (static_cast<int>(fields.size()) != ds.p)
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(ds.p) + " fields, got " +
                             std::to_string(fields.size()));
        for (int j = 0; j < ds.p; ++j) {
            if (fields[j].empty())
                throw ParseError("line " + std::to_string(line_no) + ", column " +
                                 std::to_string(j + 1) + ": empty field (missing data unsupported)");
            auto [it, inserted] =
                code_maps[j].try_emplace(fields[j], static_cast<int>(ds.alphabets[j].labels.size()));
            if (inserted) ds.alphabets[j].labels.push_back(fields[j]);
            ds.codes.push_back(it->second);
        }
        ++ds.n;
    }
    if (ds.n == 0) throw ParseError("empty input: no data rows");
    for (int j = 0; j < ds.p; ++j)
        if (ds.alphabets[j].m() == 1)
            ds.warnings.push_back("variable '" + ds.variable_names[j] +
                                  "' is constant (m=1); it contributes nothing to the model");
    return ds;
}

// Number of coordinates at which two coded vectors differ.
inline int hamming_distance(const std::vector<int>& x, const std::vector<int>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("hamming_distance: length mismatch");
    int d = 0;
    for (size_t j = 0; j < x.size(); ++j) d += x[j] != y[j];
    return d;
}

inline int hamming_distance(const int* x, const int* y, int p) {
    int d = 0;
    for (int j = 0; j < p; ++j) d += x[j] != y[j];
    return d;
}

// Flat n*n matrix of pairwise Hamming distances.
inline std::vector<int> dissimilarity_matrix(const CategoricalDataset& ds) {
    std::vector<int> d(static_cast<size_t>(ds.n) * ds.n, 0);
    for (int i = 0; i < ds.n; ++i)
        for (int k = i + 1; k < ds.n; ++k) {
            const int v = hamming_distance(ds.row(i), ds.row(k), ds.p);
            d[static_cast<size_t>(i) * ds.n + k] = v;
            d[static_cast<size_t>(k) * ds.n + i] = v;
        }
    return d;
}

}  // namespace hammix
