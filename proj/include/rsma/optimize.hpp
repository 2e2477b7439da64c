#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rsma/rates.hpp"

namespace rsma {

enum class InitStrategy { mrt_plus_common, random };
enum class Objective { sum_rate, max_min };

inline std::string objective_name(Objective o) {
    return o == Objective::sum_rate ? "sr" : "mmf";
}

inline Objective parse_objective(const std::string& s) {
    if (s == "sr") return Objective::sum_rate;
    if (s == "mmf") return Objective::max_min;
    throw std::invalid_argument("unknown objective: " + s);
}

// Log-barrier ascent controls. With the defaults the inner loop runs at
// tau = 1, 10, 100, 1000. gamma is the softmin sharpness (per bit) used for
// the max-min subgradient weights; -30 keeps the smoothing gap below
// 0.05 bit for two users.
struct BarrierConfig {
    double tau0 = 1.0;
    double beta = 10.0;
    double tau_max = 1e4;
    double eps = 1e-5;
    int v_max = 300;
    double armijo_c = 1e-4;
    double armijo_shrink = 0.5;
    double gamma = -30.0;

    bool operator==(const BarrierConfig&) const = default;
};

struct TracePoint {
    int outer = 0;
    int inner = 0;
    double objective_bits = 0.0; // barrier objective scaled by 1/ln 2
};

struct OptResult {
    Precoder p_star;
    CommonAllocation c_star;
    double objective_bits = 0.0;
    bool converged = true;
    std::vector<TracePoint> trace;
};

// Structured init: common column along the dominant left singular direction
// of the stacked channels with half the budget, private columns matched to
// each user's channel sharing the other half. Every returned precoder has
// squared Frobenius norm exactly 0.95 * p_t (strictly interior).
inline std::vector<Precoder> init_precoders(const ChannelRealization& ch, double p_t,
                                            InitStrategy strategy, int restarts,
                                            std::uint64_t seed) {
    if (p_t <= 0.0) throw std::invalid_argument("power budget must be > 0");
    if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
    const int n_t = int(ch.h.rows());
    const int K = int(ch.h.cols());
    const double target = 0.95 * p_t;
    std::vector<Precoder> out;
    auto random_init = [&](int idx) {
        Precoder pr;
        pr.power_budget = p_t;
        pr.p.resize(n_t, K + 1);
        SplitMix64 g(mix_seed(seed, std::uint64_t(idx)));
        for (int c = 0; c < K + 1; ++c)
            for (int r = 0; r < n_t; ++r) pr.p(r, c) = g.cnormal();
        pr.p *= std::sqrt(target / pr.p.squaredNorm());
        return pr;
    };
    if (strategy == InitStrategy::mrt_plus_common) {
        Precoder pr;
        pr.power_budget = p_t;
        pr.p.resize(n_t, K + 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(ch.h * ch.h.adjoint());
        Eigen::VectorXcd u = es.eigenvectors().col(n_t - 1); // largest eigenvalue
        pr.p.col(0) = u * std::sqrt(target / 2.0);
        for (int k = 0; k < K; ++k) {
            const double nrm = ch.h.col(k).norm();
            Eigen::VectorXcd dir = Eigen::VectorXcd::Zero(n_t);
            if (nrm > 0.0)
                dir = ch.h.col(k) / nrm;
            else
                dir(0) = 1.0;
            pr.p.col(1 + k) = dir * std::sqrt(target / (2.0 * K));
        }
        out.push_back(std::move(pr));
        for (int i = 1; i < restarts; ++i) out.push_back(random_init(i));
    } else {
        for (int i = 0; i < restarts; ++i) out.push_back(random_init(i));
    }
    return out;
}

// Max-min split of the common rate. ic_prime(k) is the common rate user k's
// segment is paid at (the conventional schemes pass min_l common(l)
// replicated), ip(k) the private rate floor. Users are processed in
// ascending private-rate order; the returned level xi equalizes every served
// user at c_k * ic_prime(k) + ip(k) = xi while unserved users already sit at
// ip >= xi. Degenerate common rates (<= 1e-12) yield the uniform split.
inline std::pair<CommonAllocation, double> allocate_common_mmf(
    const Eigen::VectorXd& ic_prime, const Eigen::VectorXd& ip) {
    const int K = int(ic_prime.size());
    if (K < 1) throw std::invalid_argument("need at least one user");
    if (ip.size() != K) throw std::invalid_argument("rate vectors disagree on size");
    Eigen::VectorXd a = ic_prime, b = ip;
    for (int k = 0; k < K; ++k) {
        if (!std::isfinite(a(k)) || !std::isfinite(b(k)))
            throw std::invalid_argument("rates must be finite");
        if (a(k) < -1e-9 || b(k) < -1e-9)
            throw std::invalid_argument("rates must be nonnegative");
        a(k) = std::max(a(k), 0.0);
        b(k) = std::max(b(k), 0.0);
    }
    CommonAllocation alloc;
    alloc.c = Eigen::VectorXd::Zero(K);
    if (a.minCoeff() <= 1e-12) {
        alloc.c.setConstant(1.0 / K);
        return {alloc, b.minCoeff()};
    }
    std::vector<int> order(K);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int l, int r) { return b(l) < b(r); });
    for (int served = K; served >= 1; --served) {
        double inv_sum = 0.0, ratio_sum = 0.0;
        for (int i = 0; i < served; ++i) {
            inv_sum += 1.0 / a(order[i]);
            ratio_sum += b(order[i]) / a(order[i]);
        }
        const double xi = (1.0 + ratio_sum) / inv_sum;
        bool ok = true;
        for (int i = 0; i < served && ok; ++i)
            if (xi - b(order[i]) < -1e-15 * std::max(1.0, xi)) ok = false;
        if (!ok) continue;
        for (int i = 0; i < served; ++i)
            alloc.c(order[i]) = std::max(0.0, (xi - b(order[i])) / a(order[i]));
        // xi spends the whole common rate by construction, but each share
        // goes through (xi - b)/a whose rounding error grows without bound
        // as a -> 0 (the cancellation xi - b loses eps*b absolute, so the
        // share is off by eps*b/a relative); rescale so the sum is exact
        const double total = alloc.c.sum();
        if (total > 0.0)
            alloc.c /= total;
        else
            alloc.c.setConstant(1.0 / K);
        return {alloc, xi};
    }
    throw std::logic_error("allocation loop must terminate at one served user");
}

namespace detail {

inline std::uint64_t mode_hash(const TransmissionMode& m) {
    std::uint64_t h = 1469598103934665603ull; // FNV-1a
    for (char c : m.name()) {
        h ^= std::uint64_t(static_cast<unsigned char>(c));
        h *= 1099511628211ull;
    }
    return h;
}

// Unclamped per-stream rates in nats, private decoder fixed by the scheme.
struct RawRates {
    Eigen::VectorXd common;
    Eigen::VectorXd priv;
};

// One (channel, mode, scheme) optimization problem: rate and gradient
// evaluations sharing a ModeContext.
class ModeEvaluator {
  public:
    ModeEvaluator(const ChannelRealization& ch, const TransmissionMode& mode,
                  Scheme scheme, double sigma2)
        : ch_(ch), ctx_(mode, int(ch.h.cols())), scheme_(scheme), sigma2_(sigma2),
          null_c_(mode.common_alphabet.is_null()),
          null_p_(mode.private_alphabet.is_null()), sic_(scheme == Scheme::conv_sic) {}

    int users() const { return ctx_.users; }
    Scheme scheme() const { return scheme_; }
    bool common_active() const { return !null_c_; }

    RawRates rates(const Precoder& p) const {
        const int K = ctx_.users;
        RawRates rr;
        rr.common = Eigen::VectorXd::Zero(K);
        rr.priv = Eigen::VectorXd::Zero(K);
        for (int k = 0; k < K; ++k) {
            const Eigen::VectorXcd h = ch_.h.col(k);
            if (!null_c_) {
                auto sp = common_stack(p, ctx_, k);
                rr.common(k) =
                    gmi_approx_nats(effective_channel(h, sp, sigma2_),
                                    ctx_.mode.common_alphabet, ctx_.i_common,
                                    ctx_.j_others);
            }
            if (!null_p_) {
                auto sp = private_stack(p, ctx_, k, sic_);
                rr.priv(k) = gmi_approx_nats(
                    effective_channel(h, sp, sigma2_), ctx_.mode.private_alphabet,
                    sic_ ? ctx_.i_sic : ctx_.i_nonsic, ctx_.j_others);
            }
        }
        return rr;
    }

    // gradient of user k's common rate, scattered to global columns
    Eigen::MatrixXcd common_grad(const Precoder& p, int k) const {
        Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(p.p.rows(), p.p.cols());
        if (null_c_) return g;
        auto sp = common_stack(p, ctx_, k);
        scatter(g, gmi_approx_grad(ch_.h.col(k), sp, ctx_.mode.common_alphabet,
                                   ctx_.i_common, ctx_.j_others, sigma2_),
                sp.column_map);
        return g;
    }

    Eigen::MatrixXcd private_grad(const Precoder& p, int k) const {
        Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(p.p.rows(), p.p.cols());
        if (null_p_) return g;
        auto sp = private_stack(p, ctx_, k, sic_);
        scatter(g, gmi_approx_grad(ch_.h.col(k), sp, ctx_.mode.private_alphabet,
                                   sic_ ? ctx_.i_sic : ctx_.i_nonsic, ctx_.j_others,
                                   sigma2_),
                sp.column_map);
        return g;
    }

    // min (conventional) or max (per-user segments) picker, ties to the
    // lowest index
    int select_common(const Eigen::VectorXd& common) const {
        int sel = 0;
        for (int k = 1; k < ctx_.users; ++k) {
            if (scheme_ == Scheme::cs ? common(k) > common(sel)
                                      : common(k) < common(sel))
                sel = k;
        }
        return sel;
    }

    double sum_objective_nats(const RawRates& rr) const {
        const double c = null_c_ ? 0.0 : rr.common(select_common(rr.common));
        return c + rr.priv.sum();
    }

    Eigen::MatrixXcd sum_gradient(const Precoder& p, const RawRates& rr) const {
        Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(p.p.rows(), p.p.cols());
        if (!null_c_) g += common_grad(p, select_common(rr.common));
        for (int k = 0; k < ctx_.users; ++k) g += private_grad(p, k);
        return g;
    }

    // per-user rates in bits, clamped below at 0 (the approximation never
    // exceeds the alphabet cap, so only the lower clamp can bind)
    Eigen::VectorXd user_bits(const RawRates& rr, const CommonAllocation& alloc) const {
        const int K = ctx_.users;
        Eigen::VectorXd cb = clamped_common_bits(rr);
        Eigen::VectorXd r(K);
        const int sel = select_common(cb);
        for (int k = 0; k < K; ++k) {
            const double paid = scheme_ == Scheme::cs ? cb(k) : cb(sel);
            r(k) = alloc.c(k) * paid +
                   std::max(rr.priv(k), 0.0) / std::numbers::ln2;
        }
        return r;
    }

    Eigen::VectorXd clamped_common_bits(const RawRates& rr) const {
        return rr.common.cwiseMax(0.0) / std::numbers::ln2;
    }

    Eigen::VectorXd clamped_priv_bits(const RawRates& rr) const {
        return rr.priv.cwiseMax(0.0) / std::numbers::ln2;
    }

    Eigen::MatrixXcd mmf_gradient(const Precoder& p, const RawRates& rr,
                                  const CommonAllocation& alloc, double gamma) const {
        const int K = ctx_.users;
        Eigen::VectorXd r_bits = user_bits(rr, alloc);
        const double shift = (gamma * r_bits.array()).maxCoeff();
        Eigen::ArrayXd w = (gamma * r_bits.array() - shift).exp();
        w /= w.sum();
        Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(p.p.rows(), p.p.cols());
        const int sel = select_common(clamped_common_bits(rr));
        Eigen::MatrixXcd g_common_sel;
        if (!null_c_ && scheme_ != Scheme::cs) g_common_sel = common_grad(p, sel);
        for (int k = 0; k < K; ++k) {
            if (!null_c_ && alloc.c(k) > 0.0) {
                if (scheme_ == Scheme::cs)
                    g += (w(k) * alloc.c(k)) * common_grad(p, k);
                else
                    g += (w(k) * alloc.c(k)) * g_common_sel;
            }
            g += w(k) * private_grad(p, k);
        }
        return g;
    }

  private:
    static void scatter(Eigen::MatrixXcd& g, const Eigen::MatrixXcd& gs,
                        const std::vector<int>& map) {
        for (int c = 0; c < gs.cols(); ++c) g.col(map[std::size_t(c)]) += gs.col(c);
    }

    const ChannelRealization& ch_;
    ModeContext ctx_;
    Scheme scheme_;
    double sigma2_;
    bool null_c_, null_p_, sic_;
};

// Zero the columns of null-alphabet streams and rescale the active ones so
// an init keeps its Frobenius budget instead of wasting it on columns that
// transmit nothing.
inline Precoder project_to_mode(const Precoder& init, const TransmissionMode& mode) {
    Precoder p = init;
    const double before = p.p.squaredNorm();
    if (mode.common_alphabet.is_null()) p.p.col(0).setZero();
    if (mode.private_alphabet.is_null())
        for (int k = 1; k < p.p.cols(); ++k) p.p.col(k).setZero();
    const double after = p.p.squaredNorm();
    if (after <= 0.0) throw std::invalid_argument("init is zero on all active columns");
    p.p *= std::sqrt(before / after);
    return p;
}

// largest alpha keeping ||P + alpha*D||_F^2 < p_t, shrunk 1% off the edge
inline double max_feasible_step(const Precoder& p, const Eigen::MatrixXcd& d) {
    const double q2 = d.squaredNorm();
    if (q2 <= 0.0) return 0.0;
    const double q1 = 2.0 * (p.p.array().conjugate() * d.array()).sum().real();
    const double q0 = p.p.squaredNorm() - p.power_budget; // < 0 in the interior
    const double disc = q1 * q1 - 4.0 * q2 * q0;
    const double root = (-q1 + std::sqrt(std::max(disc, 0.0))) / (2.0 * q2);
    return 0.99 * std::max(root, 0.0);
}

struct BarrierState {
    Precoder p;
    std::vector<TracePoint> trace;
    bool converged = true;
};

// Shared barrier ascent on tau * objective + log(p_t - ||P||^2).
//   rates:     P -> RawRates (the expensive evaluations)
//   refresh:   RawRates -> void, lets the max-min loop re-derive its
//              allocation between steps; must never decrease the objective
//              at fixed rates, which keeps recorded traces monotone
//   objective: RawRates -> nats (cheap, uses the refreshed state)
//   gradient:  (P, RawRates) -> ascent direction in nats
template <typename RatesF, typename RefreshF, typename ObjF, typename GradF>
BarrierState barrier_ascend(Precoder p, const BarrierConfig& cfg, RatesF rates,
                            RefreshF refresh, ObjF objective_nats, GradF gradient) {
    BarrierState st;
    const double p_t = p.power_budget;
    if (p.p.squaredNorm() >= p_t)
        throw std::invalid_argument("init must be strictly inside the power budget");
    double tau = cfg.tau0;
    int outer = 0;
    RawRates rr = rates(p);
    while (true) {
        refresh(rr);
        double omega = tau * objective_nats(rr) + std::log(p_t - p.p.squaredNorm());
        bool eps_exit = false;
        double a_prev = 0.25;
        for (int v = 0; v < cfg.v_max; ++v) {
            Eigen::MatrixXcd delta =
                tau * gradient(p, rr) + p.p / (p.p.squaredNorm() - p_t);
            const double slope = 2.0 * delta.squaredNorm();
            const double a_max = max_feasible_step(p, delta);
            if (a_max <= 0.0 || slope <= 0.0) {
                eps_exit = true;
                break;
            }
            double a = std::min(4.0 * a_prev, a_max);
            bool accepted = false;
            Precoder trial = p;
            RawRates rr_t;
            double om_t = 0.0;
            while (a > 1e-18) {
                trial.p = p.p + a * delta;
                rr_t = rates(trial);
                om_t = tau * objective_nats(rr_t) +
                       std::log(p_t - trial.p.squaredNorm());
                if (std::isfinite(om_t) && om_t >= omega + cfg.armijo_c * a * slope) {
                    accepted = true;
                    break;
                }
                a *= cfg.armijo_shrink;
            }
            if (!accepted) {
                eps_exit = true; // no ascent step exists along this direction
                break;
            }
            p.p = trial.p;
            rr = std::move(rr_t);
            st.trace.push_back({outer, v, om_t / std::numbers::ln2});
            const double gain = om_t - omega;
            a_prev = a;
            if (std::abs(gain) < cfg.eps) {
                eps_exit = true;
                break;
            }
            refresh(rr);
            omega = tau * objective_nats(rr) + std::log(p_t - p.p.squaredNorm());
        }
        if (!eps_exit) st.converged = false;
        tau *= cfg.beta;
        ++outer;
        if (tau >= cfg.tau_max) break;
    }
    st.p = std::move(p);
    return st;
}

} // namespace detail

// Ascent direction of the sum rate: gradient of the selected user's common
// rate (min for conventional, max for per-user segments) plus all private
// gradients. Nats, global precoder layout.
inline Eigen::MatrixXcd sr_subgradient(const Precoder& p, const ChannelRealization& ch,
                                       const TransmissionMode& mode, Scheme scheme,
                                       double sigma2) {
    detail::ModeEvaluator ev(ch, mode, scheme, sigma2);
    return ev.sum_gradient(p, ev.rates(p));
}

// Softmin-weighted ascent direction of the max-min objective at a fixed
// common-rate split (weights from the per-user rates in bits, sharpness
// gamma per bit).
inline Eigen::MatrixXcd mmf_subgradient(const Precoder& p, const ChannelRealization& ch,
                                        const TransmissionMode& mode, Scheme scheme,
                                        double sigma2, const CommonAllocation& alloc,
                                        double gamma) {
    detail::ModeEvaluator ev(ch, mode, scheme, sigma2);
    validate_allocation(alloc, ev.users());
    return ev.mmf_gradient(p, ev.rates(p), alloc, gamma);
}

inline OptResult maximize_sum_rate(const ChannelRealization& ch,
                                   const TransmissionMode& mode, Scheme scheme,
                                   double sigma2, const BarrierConfig& cfg,
                                   const std::vector<Precoder>& inits) {
    if (inits.empty()) throw std::invalid_argument("need at least one init");
    detail::ModeEvaluator ev(ch, mode, scheme, sigma2);
    OptResult best;
    bool have = false;
    for (const auto& init : inits) {
        auto st = detail::barrier_ascend(
            detail::project_to_mode(init, mode), cfg,
            [&](const Precoder& p) { return ev.rates(p); },
            [](const detail::RawRates&) {},
            [&](const detail::RawRates& rr) { return ev.sum_objective_nats(rr); },
            [&](const Precoder& p, const detail::RawRates& rr) {
                return ev.sum_gradient(p, rr);
            });
        auto sr = stream_rates(st.p, ch, mode, sigma2, RateMethod::approx);
        const double obj = sum_rate(scheme, sr);
        if (!have || obj > best.objective_bits) {
            have = true;
            best.p_star = st.p;
            best.objective_bits = obj;
            best.converged = st.converged;
            best.trace = std::move(st.trace);
            best.c_star.c = Eigen::VectorXd::Zero(ev.users());
            if (scheme == Scheme::cs) {
                int sel = 0;
                for (int k = 1; k < ev.users(); ++k)
                    if (sr.common(k) > sr.common(sel)) sel = k;
                best.c_star.c(sel) = 1.0;
            } else {
                best.c_star.c.setConstant(1.0 / ev.users());
            }
        }
    }
    return best;
}

inline OptResult maximize_mmf(const ChannelRealization& ch, const TransmissionMode& mode,
                              Scheme scheme, double sigma2, const BarrierConfig& cfg,
                              const std::vector<Precoder>& inits) {
    if (inits.empty()) throw std::invalid_argument("need at least one init");
    detail::ModeEvaluator ev(ch, mode, scheme, sigma2);
    const int K = ev.users();
    OptResult best;
    bool have = false;
    for (const auto& init : inits) {
        CommonAllocation alloc;
        alloc.c = Eigen::VectorXd::Constant(K, 1.0 / K);
        auto st = detail::barrier_ascend(
            detail::project_to_mode(init, mode), cfg,
            [&](const Precoder& p) { return ev.rates(p); },
            [&](const detail::RawRates& rr) {
                Eigen::VectorXd cb = ev.clamped_common_bits(rr);
                Eigen::VectorXd icp(K);
                const double cmin = cb.minCoeff();
                for (int k = 0; k < K; ++k)
                    icp(k) = scheme == Scheme::cs ? cb(k) : cmin;
                alloc = allocate_common_mmf(icp, ev.clamped_priv_bits(rr)).first;
            },
            // acceptance and traces use the true min user rate: the
            // allocation refresh maximizes it exactly at fixed rates, so the
            // recorded trace is provably monotone inside an inner loop; the
            // softmin enters through the subgradient weights
            [&](const detail::RawRates& rr) {
                return ev.user_bits(rr, alloc).minCoeff() * std::numbers::ln2;
            },
            [&](const Precoder& p, const detail::RawRates& rr) {
                return ev.mmf_gradient(p, rr, alloc, cfg.gamma);
            });
        auto sr = stream_rates(st.p, ch, mode, sigma2, RateMethod::approx);
        Eigen::VectorXd icp(K), ip(K);
        for (int k = 0; k < K; ++k)
            ip(k) = scheme == Scheme::conv_sic ? sr.private_sic(k)
                                               : sr.private_nonsic(k);
        const double cmin = sr.common.minCoeff();
        for (int k = 0; k < K; ++k) icp(k) = scheme == Scheme::cs ? sr.common(k) : cmin;
        auto alloc_final = allocate_common_mmf(icp, ip).first;
        const double obj = user_rates(scheme, sr, alloc_final).minCoeff();
        if (!have || obj > best.objective_bits) {
            have = true;
            best.p_star = st.p;
            best.c_star = alloc_final;
            best.objective_bits = obj;
            best.converged = st.converged;
            best.trace = std::move(st.trace);
        }
    }
    return best;
}

struct ModeSearchResult {
    TransmissionMode mode;
    OptResult result;
};

// Optimize every feasible mode and keep the best final objective. Modes are
// visited in decreasing private cardinality and only a strictly better
// objective replaces the incumbent, so ties resolve toward the larger
// private alphabet. Per-mode seeds derive from the mode name, not the list
// position, so a restricted catalog reproduces the same branches.
inline ModeSearchResult adaptive_mode_search(
    const ChannelRealization& ch, double p_t, int delta, Scheme scheme,
    Objective objective, double sigma2, const BarrierConfig& cfg, int restarts,
    std::uint64_t seed, const std::vector<TransmissionMode>* mode_set = nullptr) {
    std::vector<TransmissionMode> modes =
        mode_set ? *mode_set : modes_for_complexity(delta);
    if (modes.empty()) throw std::invalid_argument("empty mode set");
    ModeSearchResult best;
    bool have = false;
    for (const auto& mode : modes) {
        if (!mode_feasible(mode, delta))
            throw std::invalid_argument("mode " + mode.name() +
                                        " exceeds the complexity budget");
        auto inits = init_precoders(ch, p_t, InitStrategy::mrt_plus_common, restarts,
                                    mix_seed(seed, detail::mode_hash(mode)));
        OptResult res = objective == Objective::sum_rate
                            ? maximize_sum_rate(ch, mode, scheme, sigma2, cfg, inits)
                            : maximize_mmf(ch, mode, scheme, sigma2, cfg, inits);
        if (!have || res.objective_bits > best.result.objective_bits) {
            have = true;
            best.mode = mode;
            best.result = std::move(res);
        }
    }
    return best;
}

} // namespace rsma
