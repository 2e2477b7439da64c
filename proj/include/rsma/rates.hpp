#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>
#include <vector>

#include "rsma/channel.hpp"
#include "rsma/gmi.hpp"

namespace rsma {

// Global downlink precoder: column 0 precodes the common stream, column 1+k
// the private stream of user k. Frobenius norm squared must stay strictly
// below power_budget.
struct Precoder {
    Eigen::MatrixXcd p; // n_t x (K+1)
    double power_budget = 1.0;

    int users() const { return int(p.cols()) - 1; }
};

enum class Scheme { conv_sic, conv_nonsic, cs };

inline std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::conv_sic: return "conv_sic";
        case Scheme::conv_nonsic: return "conv_nonsic";
        case Scheme::cs: return "cs";
    }
    throw std::logic_error("bad scheme");
}

inline Scheme parse_scheme(const std::string& s) {
    if (s == "conv_sic") return Scheme::conv_sic;
    if (s == "conv_nonsic") return Scheme::conv_nonsic;
    if (s == "cs") return Scheme::cs;
    throw std::invalid_argument("unknown scheme: " + s);
}

enum class RateMethod { exact, approx };

struct GmiSettings {
    long mc_samples = 2000;
    std::uint64_t seed = 0;
    SGrouping grouping = SGrouping::consistent;
};

// Per-stream decodable rates in bits: common(k) is user k's rate for the
// common stream; private_sic assumes the common stream was removed first;
// private_nonsic decodes the private stream jointly with the common one.
struct StreamRates {
    Eigen::VectorXd common;
    Eigen::VectorXd private_sic;
    Eigen::VectorXd private_nonsic;
};

namespace detail {

// Alphabet sets of the three decoding problems are fixed by (mode, K);
// cache them when evaluating many precoders for one mode.
struct ModeContext {
    TransmissionMode mode;
    int users;
    VectorAlphabet i_common;  // [X_p]
    VectorAlphabet i_sic;     // [{0}]
    VectorAlphabet i_nonsic;  // [X_c]
    VectorAlphabet j_others;  // [X_p]^(K-1)

    ModeContext(const TransmissionMode& m, int k_users) : mode(m), users(k_users) {
        if (k_users < 1) throw std::invalid_argument("need at least one user");
        i_common = product_alphabet({m.private_alphabet});
        i_sic = product_alphabet({make_constellation("null")});
        i_nonsic = product_alphabet({m.common_alphabet});
        j_others = product_alphabet(
            std::vector<Alphabet>(std::size_t(k_users - 1), m.private_alphabet));
    }
};

// Null-alphabet streams transmit nothing: their columns enter every
// effective-channel block as zeros regardless of the precoder content.
inline Eigen::VectorXcd stream_column(const Precoder& p, int col, bool is_null) {
    if (is_null) return Eigen::VectorXcd::Zero(p.p.rows());
    return p.p.col(col);
}

inline StackedPrecoder common_stack(const Precoder& p, const ModeContext& ctx, int k) {
    const int K = ctx.users;
    StackedPrecoder sp;
    sp.dim_i = 1;
    sp.dim_j = K - 1;
    sp.cols.resize(p.p.rows(), 1 + sp.dim_i + sp.dim_j);
    sp.column_map.resize(1 + sp.dim_i + sp.dim_j);
    const bool null_c = ctx.mode.common_alphabet.is_null();
    const bool null_p = ctx.mode.private_alphabet.is_null();
    sp.cols.col(0) = stream_column(p, 0, null_c);
    sp.column_map[0] = 0;
    sp.cols.col(1) = stream_column(p, 1 + k, null_p);
    sp.column_map[1] = 1 + k;
    int out = 2;
    for (int other = 0; other < K; ++other) {
        if (other == k) continue;
        sp.cols.col(out) = stream_column(p, 1 + other, null_p);
        sp.column_map[out] = 1 + other;
        ++out;
    }
    return sp;
}

inline StackedPrecoder private_stack(const Precoder& p, const ModeContext& ctx, int k,
                                     bool sic) {
    const int K = ctx.users;
    StackedPrecoder sp;
    sp.dim_i = 1;
    sp.dim_j = K - 1;
    sp.cols.resize(p.p.rows(), 1 + sp.dim_i + sp.dim_j);
    sp.column_map.resize(1 + sp.dim_i + sp.dim_j);
    const bool null_c = ctx.mode.common_alphabet.is_null();
    const bool null_p = ctx.mode.private_alphabet.is_null();
    sp.cols.col(0) = stream_column(p, 1 + k, null_p);
    sp.column_map[0] = 1 + k;
    // after SIC the common stream is absent entirely; jointly decoding a
    // {0} alphabet over a zero column is the same decoding problem
    sp.cols.col(1) = stream_column(p, 0, sic || null_c);
    sp.column_map[1] = 0;
    int out = 2;
    for (int other = 0; other < K; ++other) {
        if (other == k) continue;
        sp.cols.col(out) = stream_column(p, 1 + other, null_p);
        sp.column_map[out] = 1 + other;
        ++out;
    }
    return sp;
}

} // namespace detail

inline StreamRates stream_rates(const Precoder& p, const ChannelRealization& ch,
                                const TransmissionMode& mode, double sigma2,
                                RateMethod method, const GmiSettings& gs = {}) {
    const int K = int(ch.h.cols());
    if (p.p.cols() != K + 1)
        throw std::invalid_argument("precoder must have K+1 columns");
    if (p.p.rows() != ch.h.rows())
        throw std::invalid_argument("precoder and channel disagree on n_t");
    detail::ModeContext ctx(mode, K);
    StreamRates sr;
    sr.common.resize(K);
    sr.private_sic.resize(K);
    sr.private_nonsic.resize(K);
    const auto& xp = mode.private_alphabet;
    const auto& xc = mode.common_alphabet;
    auto value = [&](const EffectiveChannel& e, const Alphabet& x,
                     const VectorAlphabet& i, const VectorAlphabet& j, int role,
                     int k) -> double {
        if (method == RateMethod::approx) return gmi_approx(e, x, i, j);
        return gmi_exact(e, x, i, j, gs.mc_samples,
                         mix_seed(gs.seed, std::uint64_t(role), std::uint64_t(k)),
                         gs.grouping)
            .value_bits;
    };
    for (int k = 0; k < K; ++k) {
        const Eigen::VectorXcd h = ch.h.col(k);
        if (xc.is_null()) {
            sr.common(k) = 0.0;
        } else {
            auto sp = detail::common_stack(p, ctx, k);
            sr.common(k) = value(effective_channel(h, sp, sigma2), xc, ctx.i_common,
                                 ctx.j_others, 0, k);
        }
        if (xp.is_null()) {
            sr.private_sic(k) = 0.0;
            sr.private_nonsic(k) = 0.0;
        } else if (xc.is_null()) {
            // no common stream: cancellation and joint decoding collapse to
            // the same problem (zero column, single-point joint set), so one
            // evaluation serves both
            auto sps = detail::private_stack(p, ctx, k, true);
            const double v = value(effective_channel(h, sps, sigma2), xp, ctx.i_sic,
                                   ctx.j_others, 1, k);
            sr.private_sic(k) = v;
            sr.private_nonsic(k) = v;
        } else {
            auto sps = detail::private_stack(p, ctx, k, true);
            sr.private_sic(k) = value(effective_channel(h, sps, sigma2), xp, ctx.i_sic,
                                      ctx.j_others, 1, k);
            auto spn = detail::private_stack(p, ctx, k, false);
            sr.private_nonsic(k) = value(effective_channel(h, spn, sigma2), xp,
                                         ctx.i_nonsic, ctx.j_others, 2, k);
        }
    }
    return sr;
}

// Fraction of the common rate assigned to each user. Entries are
// nonnegative and sum to 1.
struct CommonAllocation {
    Eigen::VectorXd c;
};

inline void validate_allocation(const CommonAllocation& alloc, int users) {
    if (alloc.c.size() != users)
        throw std::invalid_argument("allocation size does not match user count");
    double sum = 0.0;
    for (int k = 0; k < users; ++k) {
        if (alloc.c(k) < -1e-12)
            throw std::invalid_argument("allocation has a negative entry");
        sum += alloc.c(k);
    }
    if (sum > 1.0 + 1e-9)
        throw std::invalid_argument("allocation exceeds the common rate");
}

// Per-user achievable rates.
//   conv_sic:    c_k * min_l common(l) + private_sic(k)
//   conv_nonsic: c_k * min_l common(l) + private_nonsic(k)
//   cs:          c_k * common(k)       + private_nonsic(k)
// The conventional schemes share one common codeword, so the weakest user
// limits it; per-user segments lift that coupling and never pair with SIC.
inline Eigen::VectorXd user_rates(Scheme scheme, const StreamRates& sr,
                                  const CommonAllocation& alloc) {
    const int K = int(sr.common.size());
    validate_allocation(alloc, K);
    Eigen::VectorXd r(K);
    const double cmin = sr.common.minCoeff();
    for (int k = 0; k < K; ++k) {
        switch (scheme) {
            case Scheme::conv_sic:
                r(k) = alloc.c(k) * cmin + sr.private_sic(k);
                break;
            case Scheme::conv_nonsic:
                r(k) = alloc.c(k) * cmin + sr.private_nonsic(k);
                break;
            case Scheme::cs:
                r(k) = alloc.c(k) * sr.common(k) + sr.private_nonsic(k);
                break;
        }
    }
    return r;
}

// Sum rate is allocation-free: the common contribution is min over users for
// the conventional schemes and max over users for per-user segments (the
// whole common rate can be granted to the best observer).
inline double sum_rate(Scheme scheme, const StreamRates& sr) {
    switch (scheme) {
        case Scheme::conv_sic:
            return sr.common.minCoeff() + sr.private_sic.sum();
        case Scheme::conv_nonsic:
            return sr.common.minCoeff() + sr.private_nonsic.sum();
        case Scheme::cs:
            return sr.common.maxCoeff() + sr.private_nonsic.sum();
    }
    throw std::logic_error("bad scheme");
}

// Common rate actually carried under an allocation; together with the
// private rates it decomposes the totals exactly.
inline double common_rate_carried(Scheme scheme, const StreamRates& sr,
                                  const CommonAllocation& alloc) {
    validate_allocation(alloc, int(sr.common.size()));
    if (scheme == Scheme::cs) return (alloc.c.array() * sr.common.array()).sum();
    return sr.common.minCoeff() * alloc.c.sum();
}

inline int decoding_complexity(const TransmissionMode& m) { return m.complexity(); }

inline bool mode_feasible(const TransmissionMode& m, int delta) {
    return m.complexity() <= delta;
}

} // namespace rsma
