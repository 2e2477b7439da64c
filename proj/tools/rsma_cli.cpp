// Command-line front-end: single-point decodable-rate evaluation, one-shot
// precoder optimization, config-driven ergodic sweeps, and the transmission
// mode catalog.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "rsma/rsma.hpp"

namespace {

rsma::cplx parse_cplx(const std::string& s) {
    const auto comma = s.find(',');
    if (comma == std::string::npos)
        throw CLI::ValidationError("complex", "expected re,im: '" + s + "'");
    std::size_t used = 0;
    const double re = std::stod(s.substr(0, comma), &used);
    const double im = std::stod(s.substr(comma + 1));
    (void)used;
    return {re, im};
}

// "re,im;re,im;..." -> column vector; empty string -> empty vector
Eigen::VectorXcd parse_cplx_list(const std::string& s) {
    std::vector<rsma::cplx> vals;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ';'))
        if (!tok.empty()) vals.push_back(parse_cplx(tok));
    Eigen::VectorXcd v(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) v(int(i)) = vals[i];
    return v;
}

std::vector<rsma::Alphabet> parse_alphabet_list(const std::string& s) {
    std::vector<rsma::Alphabet> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(rsma::make_constellation(tok));
    return out;
}

struct CommonOverrides {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string variant;
};

rsma::ExperimentConfig load_with_overrides(const CommonOverrides& ov) {
    rsma::ExperimentConfig cfg = rsma::load_config_file(ov.config_path);
    if (ov.seed_set) cfg.master_seed = ov.seed;
    if (!ov.variant.empty())
        cfg.covariance_variant = ov.variant == "printed"
                                     ? rsma::CovarianceVariant::printed
                                     : rsma::CovarianceVariant::standard;
    return cfg;
}

int cmd_modes(int delta) {
    const auto modes = rsma::modes_for_complexity(delta);
    std::cout << "# complexity budget " << delta << "\n";
    std::cout << "mode,private,common,complexity\n";
    for (const auto& m : modes)
        std::cout << m.name() << "," << m.private_alphabet.name << ","
                  << m.common_alphabet.name << "," << m.complexity() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-alphabet rate evaluation and precoder optimization"};
    app.require_subcommand(1);

    // ---- modes ----
    int delta = 16;
    auto* sub_modes = app.add_subcommand("modes", "print the transmission mode table");
    sub_modes->add_option("--delta", delta, "decoding complexity budget")
        ->default_val(16);

    // ---- gmi ----
    auto* sub_gmi =
        app.add_subcommand("gmi", "decodable rate of one effective channel");
    std::string x_name = "qpsk", i_names, j_names;
    std::string a_str = "1,0", b_str, c_str;
    double sigma2 = 1.0;
    std::string method = "approx", grouping = "consistent";
    long mc = 2000;
    std::uint64_t gmi_seed = 0;
    sub_gmi->add_option("--x", x_name, "decoded alphabet");
    sub_gmi->add_option("--i", i_names, "jointly decoded alphabets, comma separated");
    sub_gmi->add_option("--j", j_names,
                        "Gaussian-approximated alphabets, comma separated");
    sub_gmi->add_option("--a", a_str, "decoded-stream effective gain re,im");
    sub_gmi->add_option("--b", b_str, "joint-set gains re,im;re,im");
    sub_gmi->add_option("--c", c_str, "approximated-set gains re,im;re,im");
    sub_gmi->add_option("--sigma2", sigma2, "noise variance")->check(CLI::PositiveNumber);
    sub_gmi->add_option("--method", method)->check(CLI::IsMember({"approx", "exact"}));
    sub_gmi->add_option("--mc", mc, "Monte-Carlo samples for exact evaluation");
    sub_gmi->add_option("--seed", gmi_seed, "Monte-Carlo seed");
    sub_gmi->add_option("--grouping", grouping)
        ->check(CLI::IsMember({"consistent", "printed"}));

    // ---- optimize ----
    auto* sub_opt = app.add_subcommand("optimize", "optimize one channel realization");
    CommonOverrides opt_ov;
    std::string channels_path, dump_path, opt_out;
    double snr_override = 0.0;
    bool snr_set = false;
    sub_opt->add_option("--config", opt_ov.config_path, "experiment config")
        ->required()
        ->check(CLI::ExistingFile);
    sub_opt->add_option("--channels", channels_path, "channel CSV to optimize")
        ->check(CLI::ExistingFile);
    sub_opt->add_option("--seed", opt_ov.seed, "master seed override")
        ->each([&opt_ov](const std::string&) { opt_ov.seed_set = true; });
    sub_opt->add_option("--variant", opt_ov.variant, "covariance variant override")
        ->check(CLI::IsMember({"standard", "printed"}));
    sub_opt
        ->add_option("--snr", snr_override, "SNR in dB (default: first grid point)")
        ->each([&snr_set](const std::string&) { snr_set = true; });
    sub_opt->add_option("--dump-channels", dump_path,
                        "write the channel realization to this CSV");
    sub_opt->add_option("--out", opt_out, "directory for the trace CSV");

    // ---- sweep ----
    auto* sub_sweep = app.add_subcommand("sweep", "run the configured ergodic sweep");
    CommonOverrides sweep_ov;
    std::string sweep_out = ".";
    int threads = 1;
    sub_sweep->add_option("--config", sweep_ov.config_path, "experiment config")
        ->required()
        ->check(CLI::ExistingFile);
    sub_sweep->add_option("--out", sweep_out, "output directory");
    sub_sweep->add_option("--threads", threads, "worker threads")
        ->check(CLI::PositiveNumber);
    sub_sweep->add_option("--seed", sweep_ov.seed, "master seed override")
        ->each([&sweep_ov](const std::string&) { sweep_ov.seed_set = true; });
    sub_sweep->add_option("--variant", sweep_ov.variant, "covariance variant override")
        ->check(CLI::IsMember({"standard", "printed"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (sub_modes->parsed()) return cmd_modes(delta);

        if (sub_gmi->parsed()) {
            rsma::EffectiveChannel e;
            e.a = parse_cplx(a_str);
            e.b = parse_cplx_list(b_str);
            e.c = parse_cplx_list(c_str);
            e.sigma2 = sigma2;
            const rsma::Alphabet x = rsma::make_constellation(x_name);
            const auto i_set = rsma::product_alphabet(parse_alphabet_list(i_names));
            const auto j_set = rsma::product_alphabet(parse_alphabet_list(j_names));
            if (method == "approx") {
                std::cout << "value_bits " << rsma::gmi_approx(e, x, i_set, j_set)
                          << "\n";
            } else {
                const auto g = grouping == "printed" ? rsma::SGrouping::printed
                                                     : rsma::SGrouping::consistent;
                const auto est = rsma::gmi_exact(e, x, i_set, j_set, mc, gmi_seed, g);
                std::cout << "value_bits " << est.value_bits << "\ns_opt " << est.s_opt
                          << "\nstderr_bits " << est.mc_std_error_bits << "\nsamples "
                          << est.samples << "\n";
            }
            return 0;
        }

        if (sub_opt->parsed()) {
            rsma::ExperimentConfig cfg = load_with_overrides(opt_ov);
            rsma::ChannelRealization ch;
            if (!channels_path.empty()) {
                ch = rsma::load_channels_csv(channels_path);
                cfg.n_t = int(ch.h.rows());
                cfg.users = int(ch.h.cols());
            } else {
                rsma::OneRingParams orp;
                orp.n_t = cfg.n_t;
                orp.theta = cfg.theta;
                orp.delta = cfg.delta_spread;
                orp.variant = cfg.covariance_variant;
                orp.quadrature_points = cfg.quadrature_points;
                const auto factor = rsma::kl_factor(rsma::one_ring_covariance(orp));
                ch = rsma::sample_channels(
                    std::vector<rsma::CovarianceFactor>(std::size_t(cfg.users), factor),
                    rsma::mix_seed(cfg.master_seed, 0));
            }
            if (!dump_path.empty()) rsma::dump_channels_csv(dump_path, ch);
            const double snr = snr_set ? snr_override : cfg.snr_db.at(0);
            const double p_t = std::pow(10.0, snr / 10.0);
            std::vector<rsma::TransmissionMode> restricted;
            for (const auto& name : cfg.modes)
                restricted.push_back(rsma::parse_mode_name(name));
            const auto* mode_set = restricted.empty() ? nullptr : &restricted;
            const rsma::Scheme scheme = cfg.schemes.at(0);
            const std::uint64_t opt_seed = rsma::mix_seed(cfg.master_seed, 0, 0, 0);
            const auto best = rsma::adaptive_mode_search(
                ch, p_t, cfg.delta_complexity, scheme, cfg.objective, 1.0, cfg.barrier,
                cfg.restarts, opt_seed, mode_set);
            rsma::SweepRow row;
            row.snr_db = snr;
            row.scheme = scheme;
            row.mode_name = best.mode.name();
            rsma::detail::score_row(row, cfg, ch, best.mode, best.result.p_star,
                                    opt_seed);
            std::cout << "scheme " << rsma::scheme_name(scheme) << "\nmode "
                      << row.mode_name << "\nsnr_db " << snr << "\nobjective_bits "
                      << row.objective_bits << "\ncommon_carried_bits "
                      << row.common_carried_bits << "\n";
            for (int k = 0; k < row.user_bits.size(); ++k)
                std::cout << "user" << k << "_bits " << row.user_bits(k) << "\n";
            std::cout << "converged " << (best.result.converged ? "true" : "false")
                      << "\n";
            if (!opt_out.empty()) {
                std::filesystem::create_directories(opt_out);
                const auto path = std::filesystem::path(opt_out) / "trace.csv";
                std::ofstream os(path);
                if (!os) throw std::runtime_error("cannot open " + path.string());
                os << "# schema: trace v1\nouter,inner,objective_bits\n";
                for (const auto& tp : best.result.trace)
                    os << tp.outer << "," << tp.inner << ","
                       << rsma::detail::fmt_double(tp.objective_bits) << "\n";
                std::cout << "trace " << path.string() << "\n";
            }
            return 0;
        }

        // sweep
        rsma::ExperimentConfig cfg = load_with_overrides(sweep_ov);
        const auto rows = rsma::run_sweep(cfg, threads);
        std::filesystem::create_directories(sweep_out);
        const auto rows_path = std::filesystem::path(sweep_out) / "rows.csv";
        const auto summary_path = std::filesystem::path(sweep_out) / "summary.csv";
        rsma::save_rows_csv(rows_path.string(), rows, cfg.users);
        rsma::save_summary_csv(summary_path.string(), rows);
        int failed = 0;
        for (const auto& r : rows)
            if (r.status != "ok") ++failed;
        std::cout << "rows " << rows.size() << "\nfailed " << failed << "\nwrote "
                  << rows_path.string() << "\nwrote " << summary_path.string() << "\n";
        return failed == 0 ? 0 : 1;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
}
