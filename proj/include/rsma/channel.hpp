#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsma/alphabet.hpp"
#include "rsma/rng.hpp"

namespace rsma {

enum class CovarianceVariant {
    standard, // phase -j*pi*(m-n)*sin(alpha+theta), half-wavelength ULA
    printed   // verbatim alternative: -j*pi*(alpha+theta)*(m-n)*sin(alpha)
};

struct OneRingParams {
    int n_t = 2;
    double theta = 0.0;        // mean angle of departure, radians
    double delta = 0.1;        // angular half-spread, radians
    CovarianceVariant variant = CovarianceVariant::standard;
    // Composite midpoint rule. 32768 keeps the entrywise error below 1e-9
    // for n_t <= 4 in both variants (midpoint error is O(h^2)).
    int quadrature_points = 32768;
};

inline Eigen::MatrixXcd one_ring_covariance(const OneRingParams& p) {
    if (p.n_t < 1) throw std::invalid_argument("n_t must be >= 1");
    if (p.delta <= 0.0) throw std::invalid_argument("angular spread must be > 0");
    if (p.quadrature_points < 1)
        throw std::invalid_argument("quadrature_points must be >= 1");
    const int N = p.quadrature_points;
    const double w = 2.0 * p.delta / N;
    Eigen::MatrixXcd R = Eigen::MatrixXcd::Identity(p.n_t, p.n_t);
    for (int m = 0; m < p.n_t; ++m) {
        for (int n = m + 1; n < p.n_t; ++n) {
            const double d = double(m - n);
            cplx acc(0.0, 0.0);
            for (int q = 0; q < N; ++q) {
                const double alpha = -p.delta + (q + 0.5) * w;
                double phase;
                if (p.variant == CovarianceVariant::standard)
                    phase = -std::numbers::pi * d * std::sin(alpha + p.theta);
                else
                    phase = -std::numbers::pi * (alpha + p.theta) * d * std::sin(alpha);
                acc += cplx(std::cos(phase), std::sin(phase));
            }
            R(m, n) = acc / double(N);
            R(n, m) = std::conj(R(m, n));
        }
    }
    return R;
}

// Karhunen-Loeve factor: columns of `sqrt_cols` are u_i * sqrt(lambda_i) for
// eigenvalues above rel_cutoff * lambda_max, so h = sqrt_cols * w with
// w ~ CN(0, I_rank) has covariance R up to the truncated tail.
struct CovarianceFactor {
    Eigen::MatrixXcd full;      // the covariance this factor was built from
    Eigen::MatrixXcd sqrt_cols; // n_t x rank
    int rank = 0;
};

inline CovarianceFactor kl_factor(const Eigen::MatrixXcd& R, double rel_cutoff = 1e-9) {
    if (R.rows() != R.cols()) throw std::invalid_argument("covariance must be square");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(R);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("covariance eigendecomposition failed");
    const auto& ev = es.eigenvalues(); // ascending
    const double lmax = ev(ev.size() - 1);
    if (lmax <= 0.0) throw std::invalid_argument("covariance has no positive eigenvalue");
    CovarianceFactor f;
    f.full = R;
    std::vector<int> keep;
    for (int i = 0; i < ev.size(); ++i)
        if (ev(i) > rel_cutoff * lmax) keep.push_back(i);
    f.rank = int(keep.size());
    f.sqrt_cols.resize(R.rows(), f.rank);
    for (int c = 0; c < f.rank; ++c)
        f.sqrt_cols.col(c) = es.eigenvectors().col(keep[c]) * std::sqrt(ev(keep[c]));
    return f;
}

// One downlink realization: column k is user k's channel vector.
struct ChannelRealization {
    Eigen::MatrixXcd h; // n_t x K
    std::uint64_t seed_record = 0;
};

inline ChannelRealization sample_channels(const std::vector<CovarianceFactor>& factors,
                                          std::uint64_t seed) {
    if (factors.empty()) throw std::invalid_argument("need at least one user factor");
    const int n_t = int(factors[0].sqrt_cols.rows());
    ChannelRealization cr;
    cr.seed_record = seed;
    cr.h.resize(n_t, int(factors.size()));
    for (std::size_t k = 0; k < factors.size(); ++k) {
        if (factors[k].sqrt_cols.rows() != n_t)
            throw std::invalid_argument("user factors disagree on n_t");
        SplitMix64 g(mix_seed(seed, k));
        Eigen::VectorXcd w(factors[k].rank);
        for (int i = 0; i < factors[k].rank; ++i) w(i) = g.cnormal();
        cr.h.col(int(k)) = factors[k].sqrt_cols * w;
    }
    return cr;
}

// CSV dump: one row per user, interleaved re,im per antenna. The seed is
// carried in a comment line so a reload can preserve provenance.
inline void dump_channels_csv(const std::string& path, const ChannelRealization& cr) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "# seed " << cr.seed_record << "\n";
    os.precision(17);
    for (int k = 0; k < cr.h.cols(); ++k) {
        for (int m = 0; m < cr.h.rows(); ++m) {
            if (m) os << ",";
            os << cr.h(m, k).real() << "," << cr.h(m, k).imag();
        }
        os << "\n";
    }
}

inline ChannelRealization load_channels_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    ChannelRealization cr;
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto pos = line.find("seed");
            if (pos != std::string::npos)
                cr.seed_record = std::stoull(line.substr(pos + 4));
            continue;
        }
        std::vector<double> vals;
        std::size_t start = 0;
        while (start <= line.size()) {
            auto comma = line.find(',', start);
            std::string tok = line.substr(start, comma == std::string::npos
                                                     ? std::string::npos
                                                     : comma - start);
            vals.push_back(std::stod(tok));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (vals.size() % 2 != 0)
            throw std::runtime_error("channel row must have an even value count");
        if (!rows.empty() && vals.size() != rows[0].size())
            throw std::runtime_error("channel rows disagree on antenna count");
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw std::runtime_error("no channel rows in " + path);
    const int n_t = int(rows[0].size() / 2);
    cr.h.resize(n_t, int(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k)
        for (int m = 0; m < n_t; ++m)
            cr.h(m, int(k)) = cplx(rows[k][2 * m], rows[k][2 * m + 1]);
    return cr;
}

} // namespace rsma
