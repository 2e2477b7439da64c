#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsma {

using cplx = std::complex<double>;

// Finite scalar symbol alphabet, unit mean power (except "null" = {0}).
struct Alphabet {
    std::string name;
    std::vector<cplx> points;

    std::size_t size() const { return points.size(); }
    bool is_null() const { return points.size() == 1; }
    double bits() const { return std::log2(double(points.size())); }
};

// Stable names: "bpsk", "qpsk", "qam8", "qam16", "null". Grids are enumerated
// real-ascending then imag-ascending; scale factors make the mean power
// exactly 1 (1/sqrt(2), 1/sqrt(6), 1/sqrt(10)).
inline Alphabet make_constellation(const std::string& name) {
    Alphabet a;
    a.name = name;
    auto grid = [&](std::initializer_list<double> re, std::initializer_list<double> im,
                    double scale) {
        for (double r : re)
            for (double i : im) a.points.push_back(cplx(r, i) * scale);
    };
    if (name == "null") {
        a.points.push_back(cplx(0.0, 0.0));
    } else if (name == "bpsk") {
        grid({-1.0, 1.0}, {0.0}, 1.0);
    } else if (name == "qpsk") {
        grid({-1.0, 1.0}, {-1.0, 1.0}, 1.0 / std::sqrt(2.0));
    } else if (name == "qam8") {
        // rectangular 4x2 grid
        grid({-3.0, -1.0, 1.0, 3.0}, {-1.0, 1.0}, 1.0 / std::sqrt(6.0));
    } else if (name == "qam16") {
        grid({-3.0, -1.0, 1.0, 3.0}, {-3.0, -1.0, 1.0, 3.0}, 1.0 / std::sqrt(10.0));
    } else {
        throw std::invalid_argument("unknown constellation name: " + name);
    }
    return a;
}

// Cartesian product of component alphabets, flattened row-major
// (first component varies slowest). An empty component list yields the single
// zero-dimensional vector, which is the correct identity for interference
// sets of absent streams.
struct VectorAlphabet {
    int dims = 0;
    std::size_t count = 1;
    std::vector<cplx> flat; // count * dims, vector-major

    cplx at(std::size_t v, int d) const { return flat[v * dims + d]; }
};

inline VectorAlphabet product_alphabet(const std::vector<Alphabet>& components) {
    VectorAlphabet va;
    va.dims = int(components.size());
    for (const auto& c : components) {
        if (c.points.empty()) throw std::invalid_argument("empty component alphabet");
        va.count *= c.points.size();
    }
    va.flat.resize(va.count * va.dims);
    for (std::size_t v = 0; v < va.count; ++v) {
        std::size_t rem = v;
        for (int d = va.dims - 1; d >= 0; --d) {
            std::size_t n = components[d].points.size();
            va.flat[v * va.dims + d] = components[d].points[rem % n];
            rem /= n;
        }
    }
    return va;
}

// One point of the adaptive-search catalog: which constellation the private
// streams use and which one the common stream uses.
struct TransmissionMode {
    Alphabet private_alphabet;
    Alphabet common_alphabet;

    int complexity() const {
        return int(private_alphabet.size() * common_alphabet.size());
    }
    std::string name() const {
        return private_alphabet.name + "/" + common_alphabet.name;
    }
};

inline const std::vector<std::string>& constellation_names() {
    static const std::vector<std::string> names = {"null", "bpsk", "qpsk", "qam8",
                                                   "qam16"};
    return names;
}

// All (private, common) pairs with |private|*|common| == delta, ordered by
// decreasing private cardinality. The first entry is always the
// private-only endpoint and the last the multicast endpoint.
inline std::vector<TransmissionMode> modes_for_complexity(int delta) {
    if (delta != 2 && delta != 4 && delta != 8 && delta != 16)
        throw std::invalid_argument(
            "delta must be a power of two in {2,4,8,16}, got " + std::to_string(delta));
    auto by_size = [](int n) -> std::string {
        switch (n) {
            case 1: return "null";
            case 2: return "bpsk";
            case 4: return "qpsk";
            case 8: return "qam8";
            case 16: return "qam16";
        }
        throw std::invalid_argument("no constellation of size " + std::to_string(n));
    };
    std::vector<TransmissionMode> modes;
    for (int priv = delta; priv >= 1; priv /= 2) {
        TransmissionMode m;
        m.private_alphabet = make_constellation(by_size(priv));
        m.common_alphabet = make_constellation(by_size(delta / priv));
        modes.push_back(std::move(m));
    }
    return modes;
}

inline TransmissionMode parse_mode_name(const std::string& s) {
    auto slash = s.find('/');
    if (slash == std::string::npos)
        throw std::invalid_argument("mode name must be <private>/<common>, got " + s);
    TransmissionMode m;
    m.private_alphabet = make_constellation(s.substr(0, slash));
    m.common_alphabet = make_constellation(s.substr(slash + 1));
    return m;
}

} // namespace rsma
