#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "rsma/config.hpp"

namespace rsma {

// One optimized (SNR, channel realization, scheme) cell. user_bits and the
// decomposition come from the final-method re-evaluation at the optimized
// precoder, with the common split re-derived on those final rates.
struct SweepRow {
    double snr_db = 0.0;
    int realization = 0;
    Scheme scheme = Scheme::cs;
    std::string mode_name;
    double objective_bits = 0.0;
    Eigen::VectorXd user_bits;
    double common_carried_bits = 0.0;
    std::uint64_t seed = 0; // optimizer seed of this cell
    long long wall_ms = 0;  // stays 0 unless emit_timings
    std::string status = "ok";
};

namespace detail {

inline std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

// Score an optimized precoder with the configured final rate method and
// re-derive the common split on those rates, so reported decompositions are
// internally consistent even when the optimizer's surrogate disagrees.
inline void score_row(SweepRow& row, const ExperimentConfig& cfg,
                      const ChannelRealization& ch, const TransmissionMode& mode,
                      const Precoder& p, std::uint64_t opt_seed) {
    GmiSettings gs;
    gs.mc_samples = cfg.mc_samples;
    gs.seed = mix_seed(opt_seed, 0xEull);
    gs.grouping = cfg.s_grouping;
    StreamRates sr = stream_rates(p, ch, mode, 1.0, cfg.final_method, gs);
    const int K = int(sr.common.size());
    CommonAllocation alloc;
    alloc.c = Eigen::VectorXd::Zero(K);
    if (cfg.objective == Objective::sum_rate) {
        if (row.scheme == Scheme::cs) {
            int sel = 0;
            for (int k = 1; k < K; ++k)
                if (sr.common(k) > sr.common(sel)) sel = k;
            alloc.c(sel) = 1.0;
        } else {
            alloc.c.setConstant(1.0 / K);
        }
        row.objective_bits = sum_rate(row.scheme, sr);
    } else {
        Eigen::VectorXd icp(K), ip(K);
        const double cmin = sr.common.minCoeff();
        for (int k = 0; k < K; ++k) {
            icp(k) = row.scheme == Scheme::cs ? sr.common(k) : cmin;
            ip(k) = row.scheme == Scheme::conv_sic ? sr.private_sic(k)
                                                   : sr.private_nonsic(k);
        }
        alloc = allocate_common_mmf(icp, ip).first;
        row.objective_bits = user_rates(row.scheme, sr, alloc).minCoeff();
    }
    row.user_bits = user_rates(row.scheme, sr, alloc);
    row.common_carried_bits = common_rate_carried(row.scheme, sr, alloc);
}

} // namespace detail

// Optimize every (SNR, realization, scheme) cell of the experiment. Each
// realization draws one channel shared by all SNR points and schemes; the
// optimizer seed mixes in the cell coordinates. Results are deterministic
// for a fixed config regardless of the thread count: cells are scored
// independently and collected into slots, then sorted canonically by
// (snr_db, realization, scheme, mode).
inline std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, int threads = 1) {
    OneRingParams orp;
    orp.n_t = cfg.n_t;
    orp.theta = cfg.theta;
    orp.delta = cfg.delta_spread;
    orp.variant = cfg.covariance_variant;
    orp.quadrature_points = cfg.quadrature_points;
    const CovarianceFactor factor = kl_factor(one_ring_covariance(orp));
    const std::vector<CovarianceFactor> factors(std::size_t(cfg.users), factor);

    std::vector<TransmissionMode> restricted;
    for (const auto& name : cfg.modes) restricted.push_back(parse_mode_name(name));
    const std::vector<TransmissionMode>* mode_set =
        restricted.empty() ? nullptr : &restricted;

    struct Task {
        int snr_idx, realization, scheme_idx;
    };
    std::vector<Task> tasks;
    for (int si = 0; si < int(cfg.snr_db.size()); ++si)
        for (int r = 0; r < cfg.realizations; ++r)
            for (int ci = 0; ci < int(cfg.schemes.size()); ++ci)
                tasks.push_back({si, r, ci});

    std::vector<SweepRow> rows(tasks.size());
    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t t = cursor.fetch_add(1);
            if (t >= tasks.size()) return;
            const Task& task = tasks[t];
            SweepRow& row = rows[t];
            row.snr_db = cfg.snr_db[std::size_t(task.snr_idx)];
            row.realization = task.realization;
            row.scheme = cfg.schemes[std::size_t(task.scheme_idx)];
            row.user_bits = Eigen::VectorXd::Zero(cfg.users);
            const auto t0 = std::chrono::steady_clock::now();
            try {
                const ChannelRealization ch = sample_channels(
                    factors, mix_seed(cfg.master_seed, std::uint64_t(task.realization)));
                const double p_t = std::pow(10.0, row.snr_db / 10.0);
                const std::uint64_t opt_seed =
                    mix_seed(cfg.master_seed, std::uint64_t(task.realization),
                             std::uint64_t(task.snr_idx), std::uint64_t(task.scheme_idx));
                row.seed = opt_seed;
                ModeSearchResult best = adaptive_mode_search(
                    ch, p_t, cfg.delta_complexity, row.scheme, cfg.objective, 1.0,
                    cfg.barrier, cfg.restarts, opt_seed, mode_set);
                row.mode_name = best.mode.name();
                detail::score_row(row, cfg, ch, best.mode, best.result.p_star, opt_seed);
            } catch (const std::exception& ex) {
                row.status = detail::csv_safe(ex.what());
            }
            if (cfg.emit_timings) {
                const auto t1 = std::chrono::steady_clock::now();
                row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  t1 - t0)
                                  .count();
            }
        }
    };
    const int nthreads = std::max(1, std::min<int>(threads, int(tasks.size())));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return std::make_tuple(a.snr_db, a.realization, scheme_name(a.scheme),
                               a.mode_name) <
               std::make_tuple(b.snr_db, b.realization, scheme_name(b.scheme),
                               b.mode_name);
    });
    return rows;
}

inline void write_rows_csv(const std::vector<SweepRow>& rows, int users,
                           std::ostream& os) {
    using detail::fmt_double;
    os << "# schema: rows v1\n";
    os << "snr_db,realization,scheme,mode,objective_bits,common_carried_bits";
    for (int k = 0; k < users; ++k) os << ",user" << k << "_bits";
    os << ",seed,wall_ms,status\n";
    for (const auto& r : rows) {
        os << fmt_double(r.snr_db) << "," << r.realization << ","
           << scheme_name(r.scheme) << "," << r.mode_name << ","
           << fmt_double(r.objective_bits) << "," << fmt_double(r.common_carried_bits);
        for (int k = 0; k < users; ++k)
            os << "," << fmt_double(k < r.user_bits.size() ? r.user_bits(k) : 0.0);
        os << "," << r.seed << "," << r.wall_ms << "," << r.status << "\n";
    }
}

enum class ReportKind { ergodic_curve, stream_decomposition, mode_breakdown };

namespace detail {

struct SweepAcc {
    int n = 0;
    double sum = 0.0, sum2 = 0.0, carried = 0.0, priv = 0.0;
};

// groups keyed by (snr, scheme) and, when by_mode, additionally by the
// winning mode; failed cells are left out and the n column says how many
// cells each mean used
inline std::map<std::tuple<double, std::string, std::string>, SweepAcc>
sweep_groups(const std::vector<SweepRow>& rows, bool by_mode) {
    std::map<std::tuple<double, std::string, std::string>, SweepAcc> groups;
    for (const auto& r : rows) {
        if (r.status != "ok") continue;
        SweepAcc& a = groups[{r.snr_db, scheme_name(r.scheme),
                              by_mode ? r.mode_name : std::string()}];
        a.n += 1;
        a.sum += r.objective_bits;
        a.sum2 += r.objective_bits * r.objective_bits;
        a.carried += r.common_carried_bits;
        a.priv += r.user_bits.sum() - r.common_carried_bits;
    }
    return groups;
}

} // namespace detail

// One aggregate view of a finished sweep: the ergodic curve (mean and
// standard error of the objective per SNR and scheme), the exact
// common/private decomposition of the carried rates, or per-mode means of
// the adaptive search winners.
inline void write_report(const std::vector<SweepRow>& rows, ReportKind kind,
                         std::ostream& os) {
    using detail::fmt_double;
    if (rows.empty()) throw std::invalid_argument("no sweep rows to report");
    const auto groups = detail::sweep_groups(rows, kind == ReportKind::mode_breakdown);
    switch (kind) {
        case ReportKind::ergodic_curve:
            os << "# schema: ergodic_curve v1\n";
            os << "snr_db,scheme,n,mean_objective_bits,stderr_objective_bits\n";
            for (const auto& [key, a] : groups) {
                const double mean = a.sum / a.n;
                double se = 0.0;
                if (a.n >= 2) {
                    const double var = (a.sum2 - a.n * mean * mean) / (a.n - 1);
                    se = std::sqrt(std::max(var, 0.0) / a.n);
                }
                os << fmt_double(std::get<0>(key)) << "," << std::get<1>(key) << ","
                   << a.n << "," << fmt_double(mean) << "," << fmt_double(se) << "\n";
            }
            break;
        case ReportKind::stream_decomposition:
            os << "# schema: stream_decomposition v1\n";
            os << "snr_db,scheme,mean_common_carried_bits,mean_private_total_bits\n";
            for (const auto& [key, a] : groups)
                os << fmt_double(std::get<0>(key)) << "," << std::get<1>(key) << ","
                   << fmt_double(a.carried / a.n) << "," << fmt_double(a.priv / a.n)
                   << "\n";
            break;
        case ReportKind::mode_breakdown:
            os << "# schema: mode_breakdown v1\n";
            os << "snr_db,scheme,mode,n,mean_objective_bits\n";
            for (const auto& [key, a] : groups)
                os << fmt_double(std::get<0>(key)) << "," << std::get<1>(key) << ","
                   << std::get<2>(key) << "," << a.n << "," << fmt_double(a.sum / a.n)
                   << "\n";
            break;
    }
}

inline void write_summary_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
    os << "# schema: summary v1\n";
    write_report(rows, ReportKind::ergodic_curve, os);
    write_report(rows, ReportKind::stream_decomposition, os);
    write_report(rows, ReportKind::mode_breakdown, os);
}

inline void save_rows_csv(const std::string& path, const std::vector<SweepRow>& rows,
                          int users) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_rows_csv(rows, users, os);
}

inline void save_summary_csv(const std::string& path,
                             const std::vector<SweepRow>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_summary_csv(rows, os);
}

} // namespace rsma
