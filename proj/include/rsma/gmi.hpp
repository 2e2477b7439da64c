#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rsma/alphabet.hpp"
#include "rsma/rng.hpp"

namespace rsma {

// Effective scalar-channel view of one decoded stream:
//   y = a*x + b.i + c.j + n,  n ~ CN(0, sigma2)
// x is the desired symbol, i the jointly-decoded interference vector, j the
// interference the decoder treats as Gaussian.
struct EffectiveChannel {
    cplx a{0.0, 0.0};
    Eigen::RowVectorXcd b; // 1 x dim(i)
    Eigen::RowVectorXcd c; // 1 x dim(j)
    double sigma2 = 1.0;
};

// Precoder columns in the role order of one stream's decoding problem:
// col 0 carries the desired symbol, then dim_i jointly-decoded columns, then
// dim_j Gaussian-treated columns. column_map[s] is the column of the global
// precoder that stacked column s came from, so gradients can be scattered
// back. Null-alphabet streams contribute zero columns.
struct StackedPrecoder {
    Eigen::MatrixXcd cols;
    int dim_i = 0;
    int dim_j = 0;
    std::vector<int> column_map;
};

inline EffectiveChannel effective_channel(const Eigen::VectorXcd& h,
                                          const StackedPrecoder& sp, double sigma2) {
    if (sp.cols.cols() != 1 + sp.dim_i + sp.dim_j)
        throw std::invalid_argument("stacked precoder column count mismatch");
    EffectiveChannel e;
    Eigen::RowVectorXcd hp = h.adjoint() * sp.cols;
    e.a = hp(0);
    e.b = hp.segment(1, sp.dim_i);
    e.c = hp.segment(1 + sp.dim_i, sp.dim_j);
    e.sigma2 = sigma2;
    return e;
}

struct GmiEstimate {
    double value_bits = 0.0;
    double s_opt = 1.0;
    double mc_std_error_bits = 0.0;
    long samples = 0;
};

// Exponent grouping of the second expectation term of the exact metric.
// `consistent` follows the generalized-mutual-information definition
// (s multiplies the whole log-sum); `printed` applies s inside the sum, which
// blows past the log2|X| cap as s -> 0 and is kept only for comparison.
enum class SGrouping { consistent, printed };

namespace detail {

struct GmiWork {
    // alphabet-channel products shared by the estimators
    std::size_t nx = 0, ni = 0, nj = 0, m = 0; // m = nx*ni
    Eigen::ArrayXd ur, ui, u2;                 // u[xi] = a*x + b.i, x-major
    Eigen::ArrayXd br, bi_, b2;                // b.i per i
    std::vector<cplx> u, bvec, cj;
    Eigen::ArrayXd xb_re, xb_im;               // conj helpers indexed by m
    std::vector<Eigen::ArrayXd> ib_re, ib_im;  // per i-dim, indexed by m
    std::vector<Eigen::ArrayXd> i2_re, i2_im;  // per i-dim, indexed by i

    GmiWork(const EffectiveChannel& e, const Alphabet& x, const VectorAlphabet& i,
            const VectorAlphabet& j, bool for_gradient) {
        if (e.sigma2 <= 0.0) throw std::invalid_argument("sigma2 must be > 0");
        if (e.b.size() != i.dims)
            throw std::invalid_argument("effective channel b does not match dim(i)");
        if (e.c.size() != j.dims)
            throw std::invalid_argument("effective channel c does not match dim(j)");
        nx = x.size();
        ni = i.count;
        nj = j.count;
        m = nx * ni;
        u.resize(m);
        bvec.resize(ni);
        cj.resize(nj);
        for (std::size_t v = 0; v < ni; ++v) {
            cplx acc(0.0, 0.0);
            for (int d = 0; d < i.dims; ++d) acc += e.b(d) * i.at(v, d);
            bvec[v] = acc;
        }
        for (std::size_t v = 0; v < nj; ++v) {
            cplx acc(0.0, 0.0);
            for (int d = 0; d < j.dims; ++d) acc += e.c(d) * j.at(v, d);
            cj[v] = acc;
        }
        ur.resize(m); ui.resize(m); u2.resize(m);
        for (std::size_t xx = 0; xx < nx; ++xx)
            for (std::size_t v = 0; v < ni; ++v) {
                cplx val = e.a * x.points[xx] + bvec[v];
                std::size_t idx = xx * ni + v;
                u[idx] = val;
                ur(idx) = val.real();
                ui(idx) = val.imag();
                u2(idx) = std::norm(val);
            }
        br.resize(ni); bi_.resize(ni); b2.resize(ni);
        for (std::size_t v = 0; v < ni; ++v) {
            br(v) = bvec[v].real();
            bi_(v) = bvec[v].imag();
            b2(v) = std::norm(bvec[v]);
        }
        if (for_gradient) {
            xb_re.resize(m); xb_im.resize(m);
            ib_re.assign(i.dims, Eigen::ArrayXd(m));
            ib_im.assign(i.dims, Eigen::ArrayXd(m));
            i2_re.assign(i.dims, Eigen::ArrayXd(ni));
            i2_im.assign(i.dims, Eigen::ArrayXd(ni));
            for (std::size_t xx = 0; xx < nx; ++xx)
                for (std::size_t v = 0; v < ni; ++v) {
                    std::size_t idx = xx * ni + v;
                    xb_re(idx) = x.points[xx].real();
                    xb_im(idx) = x.points[xx].imag();
                    for (int d = 0; d < i.dims; ++d) {
                        ib_re[d](idx) = i.at(v, d).real();
                        ib_im[d](idx) = i.at(v, d).imag();
                    }
                }
            for (std::size_t v = 0; v < ni; ++v)
                for (int d = 0; d < i.dims; ++d) {
                    i2_re[d](v) = i.at(v, d).real();
                    i2_im[d](v) = i.at(v, d).imag();
                }
        }
    }

    double c_norm2(const EffectiveChannel& e) const { return e.c.squaredNorm(); }
};

} // namespace detail

// Closed-form proxy of the exact metric (noise variance doubled, expectation
// collapsed), unclamped and in nats. Always <= log|X|; the subtracted term
// always contains the aligned pair (xbar,ibar) = (x,i), so plain sums cannot
// underflow to zero.
inline double gmi_approx_nats(const EffectiveChannel& e, const Alphabet& x,
                              const VectorAlphabet& i, const VectorAlphabet& j) {
    if (x.size() == 1) return 0.0;
    detail::GmiWork w(e, x, i, j, false);
    const double d = w.c_norm2(e) + 2.0 * e.sigma2;
    Eigen::ArrayXd args(w.m);
    double sum1 = 0.0;
    for (std::size_t jj = 0; jj < w.nj; ++jj) {
        for (std::size_t xi = 0; xi < w.m; ++xi) {
            const cplx t = w.u[xi] + w.cj[jj];
            const double t2 = std::norm(t);
            args = -(t2 + w.u2 - 2.0 * (t.real() * w.ur + t.imag() * w.ui)) / d;
            sum1 += std::log(args.exp().sum());
        }
    }
    Eigen::ArrayXd args2(w.ni);
    double sum2 = 0.0;
    for (std::size_t jj = 0; jj < w.nj; ++jj) {
        for (std::size_t ii = 0; ii < w.ni; ++ii) {
            const cplx t = w.bvec[ii] + w.cj[jj];
            const double t2 = std::norm(t);
            args2 = -(t2 + w.b2 - 2.0 * (t.real() * w.br + t.imag() * w.bi_)) / d;
            sum2 += std::log(args2.exp().sum());
        }
    }
    return std::log(double(w.nx)) - sum1 / double(w.m * w.nj) +
           sum2 / double(w.ni * w.nj);
}

// Public approximation: bits, clamped to [0, log2|X|].
inline double gmi_approx(const EffectiveChannel& e, const Alphabet& x,
                         const VectorAlphabet& i, const VectorAlphabet& j) {
    const double v = gmi_approx_nats(e, x, i, j) / std::numbers::ln2;
    return std::clamp(v, 0.0, x.bits());
}

// Wirtinger gradient d(gmi_approx_nats)/d(conj(P_stacked)), n_t x stacked
// columns. The directional derivative along a perturbation E of the stacked
// precoder is 2*Re(trace(E^H G)). Rank one: G = h * rho.
inline Eigen::MatrixXcd gmi_approx_grad(const Eigen::VectorXcd& h,
                                        const StackedPrecoder& sp, const Alphabet& x,
                                        const VectorAlphabet& i, const VectorAlphabet& j,
                                        double sigma2) {
    EffectiveChannel e = effective_channel(h, sp, sigma2);
    const int cols = int(sp.cols.cols());
    if (x.size() == 1) return Eigen::MatrixXcd::Zero(h.size(), cols);
    detail::GmiWork w(e, x, i, j, true);
    const double d = w.c_norm2(e) + 2.0 * sigma2;
    const double d2 = d * d;
    const int di = i.dims, dj = j.dims;

    Eigen::RowVectorXcd rho = Eigen::RowVectorXcd::Zero(cols);
    Eigen::ArrayXd g(w.m), zre(w.m), zim(w.m), gzre(w.m), gzim(w.m);
    const double w1 = 1.0 / double(w.m * w.nj);
    for (std::size_t jj = 0; jj < w.nj; ++jj) {
        for (std::size_t xi = 0; xi < w.m; ++xi) {
            const cplx t = w.u[xi] + w.cj[jj];
            zre = t.real() - w.ur;
            zim = t.imag() - w.ui;
            g = (-(zre.square() + zim.square()) / d).exp();
            gzre = g * zre;
            gzim = g * zim;
            const double sg = g.sum();
            const cplx sgz(gzre.sum(), gzim.sum());
            const double sgzz = (gzre * zre + gzim * zim).sum();
            const std::size_t xx = xi / w.ni, ii = xi % w.ni;
            Eigen::RowVectorXcd svz(cols);
            // x-slot: sum gz * conj(x - xbar)
            const cplx sgzxb((gzre * w.xb_re + gzim * w.xb_im).sum(),
                             (gzim * w.xb_re - gzre * w.xb_im).sum());
            svz(0) = std::conj(x.points[xx]) * sgz - sgzxb;
            for (int dd = 0; dd < di; ++dd) {
                const cplx sgzib((gzre * w.ib_re[dd] + gzim * w.ib_im[dd]).sum(),
                                 (gzim * w.ib_re[dd] - gzre * w.ib_im[dd]).sum());
                svz(1 + dd) = std::conj(i.at(ii, dd)) * sgz - sgzib;
            }
            for (int dd = 0; dd < dj; ++dd)
                svz(1 + di + dd) = std::conj(j.at(jj, dd)) * sgz;
            Eigen::RowVectorXcd num = -d * svz;
            for (int dd = 0; dd < dj; ++dd) num(1 + di + dd) += sgzz * e.c(dd);
            rho -= (w1 / (d2 * sg)) * num;
        }
    }
    Eigen::ArrayXd g2(w.ni), z2re(w.ni), z2im(w.ni), gz2re(w.ni), gz2im(w.ni);
    const double w2 = 1.0 / double(w.ni * w.nj);
    for (std::size_t jj = 0; jj < w.nj; ++jj) {
        for (std::size_t ii = 0; ii < w.ni; ++ii) {
            const cplx t = w.bvec[ii] + w.cj[jj];
            z2re = t.real() - w.br;
            z2im = t.imag() - w.bi_;
            g2 = (-(z2re.square() + z2im.square()) / d).exp();
            gz2re = g2 * z2re;
            gz2im = g2 * z2im;
            const double sg = g2.sum();
            const cplx sgz(gz2re.sum(), gz2im.sum());
            const double sgzz = (gz2re * z2re + gz2im * z2im).sum();
            Eigen::RowVectorXcd svz = Eigen::RowVectorXcd::Zero(cols);
            for (int dd = 0; dd < di; ++dd) {
                const cplx sgzib((gz2re * w.i2_re[dd] + gz2im * w.i2_im[dd]).sum(),
                                 (gz2im * w.i2_re[dd] - gz2re * w.i2_im[dd]).sum());
                svz(1 + dd) = std::conj(i.at(ii, dd)) * sgz - sgzib;
            }
            for (int dd = 0; dd < dj; ++dd)
                svz(1 + di + dd) = std::conj(j.at(jj, dd)) * sgz;
            Eigen::RowVectorXcd num = -d * svz;
            for (int dd = 0; dd < dj; ++dd) num(1 + di + dd) += sgzz * e.c(dd);
            rho += (w2 / (d2 * sg)) * num;
        }
    }
    return h * rho;
}

namespace detail {

// Monte-Carlo machinery for the exact metric. The per-sample contributions
// V_t are accumulated in a fixed (outer-loop, sample) order so results are
// bit-identical no matter how the sample axis is chunked.
class ExactEvaluator {
  public:
    ExactEvaluator(const EffectiveChannel& e, const Alphabet& x, const VectorAlphabet& i,
                   const VectorAlphabet& j, long mc_samples, std::uint64_t seed,
                   SGrouping grouping)
        : w_(e, x, i, j, false), n_(mc_samples), grouping_(grouping) {
        if (mc_samples < 2) throw std::invalid_argument("mc_samples must be >= 2");
        d_ = w_.c_norm2(e) + e.sigma2;
        SplitMix64 g(seed);
        noise_.resize(n_);
        const double scale = std::sqrt(e.sigma2);
        for (long t = 0; t < n_; ++t) noise_[t] = scale * g.cnormal();
        outer1_ = w_.m * w_.nj;
        outer2_ = w_.ni * w_.nj;
        // per-sample doubles if the whole table is materialized
        const double per_t = double(outer1_ * (w_.nx + 1) + outer2_ * (w_.ni + 1));
        chunk_ = std::max<long>(1, long(64.0e6 / std::max(per_t, 1.0)));
        chunk_ = std::min(chunk_, n_);
        dl1_.resize(std::size_t(chunk_) * outer1_ * w_.nx);
        lmax1_.resize(std::size_t(chunk_) * outer1_);
        dl2_.resize(std::size_t(chunk_) * outer2_ * w_.ni);
        lmax2_.resize(std::size_t(chunk_) * outer2_);
        cached_ = (chunk_ == n_);
        built_ = false;
    }

    long samples() const { return n_; }

    // mean of the per-sample values at each s in `svals`; vt_out, if given,
    // receives the per-sample values for svals[0]
    std::vector<double> evaluate(const std::vector<double>& svals,
                                 std::vector<double>* vt_out) {
        std::vector<double> mean(svals.size(), 0.0);
        if (vt_out) vt_out->assign(n_, 0.0);
        for (long t0 = 0; t0 < n_; t0 += chunk_) {
            const long len = std::min(chunk_, n_ - t0);
            build_chunk(t0, len);
            for (std::size_t si = 0; si < svals.size(); ++si) {
                for (long tt = 0; tt < len; ++tt) {
                    const double v = sample_value(svals[si], tt);
                    mean[si] += v;
                    if (vt_out && si == 0) (*vt_out)[t0 + tt] = v;
                }
            }
        }
        for (auto& v : mean) v /= double(n_);
        return mean;
    }

  private:
    void build_chunk(long t0, long len) {
        if (cached_ && built_) return;
        const std::size_t nx = w_.nx, ni = w_.ni;
        Eigen::ArrayXd args(w_.m), args2(ni);
        for (long tt = 0; tt < len; ++tt) {
            const cplx n = noise_[t0 + tt];
            for (std::size_t jj = 0; jj < w_.nj; ++jj) {
                for (std::size_t xi = 0; xi < w_.m; ++xi) {
                    const cplx y = w_.u[xi] + w_.cj[jj] + n;
                    const double y2 = std::norm(y);
                    args = -(y2 + w_.u2 - 2.0 * (y.real() * w_.ur + y.imag() * w_.ui)) /
                           d_;
                    const std::size_t o1 = xi * w_.nj + jj;
                    double* dl = &dl1_[(std::size_t(tt) * outer1_ + o1) * nx];
                    double rowmax = -std::numeric_limits<double>::infinity();
                    for (std::size_t xb = 0; xb < nx; ++xb) {
                        double l;
                        if (ni == 1) {
                            l = args(xb);
                        } else {
                            const double* seg = args.data() + xb * ni;
                            double mx = seg[0];
                            for (std::size_t q = 1; q < ni; ++q) mx = std::max(mx, seg[q]);
                            double sum = 0.0;
                            for (std::size_t q = 0; q < ni; ++q)
                                sum += std::exp(seg[q] - mx);
                            l = mx + std::log(sum);
                        }
                        dl[xb] = l;
                        rowmax = std::max(rowmax, l);
                    }
                    lmax1_[std::size_t(tt) * outer1_ + o1] = rowmax;
                    for (std::size_t xb = 0; xb < nx; ++xb) dl[xb] -= rowmax;
                }
                for (std::size_t ii = 0; ii < ni; ++ii) {
                    const cplx y = w_.bvec[ii] + w_.cj[jj] + n;
                    const double y2 = std::norm(y);
                    args2 = -(y2 + w_.b2 -
                              2.0 * (y.real() * w_.br + y.imag() * w_.bi_)) /
                            d_;
                    const std::size_t o2 = ii * w_.nj + jj;
                    double* dl = &dl2_[(std::size_t(tt) * outer2_ + o2) * ni];
                    const double mx = args2.maxCoeff();
                    for (std::size_t q = 0; q < ni; ++q) dl[q] = args2(q) - mx;
                    lmax2_[std::size_t(tt) * outer2_ + o2] = mx;
                }
            }
        }
        built_ = true;
    }

    double sample_value(double s, long tt) const {
        const std::size_t nx = w_.nx, ni = w_.ni;
        double t1 = 0.0;
        for (std::size_t o1 = 0; o1 < outer1_; ++o1) {
            const double* dl = &dl1_[(std::size_t(tt) * outer1_ + o1) * nx];
            double sum = 0.0;
            for (std::size_t xb = 0; xb < nx; ++xb) sum += std::exp(s * dl[xb]);
            t1 += s * lmax1_[std::size_t(tt) * outer1_ + o1] + std::log(sum);
        }
        double t2 = 0.0;
        for (std::size_t o2 = 0; o2 < outer2_; ++o2) {
            const double* dl = &dl2_[(std::size_t(tt) * outer2_ + o2) * ni];
            const double mx = lmax2_[std::size_t(tt) * outer2_ + o2];
            double sum = 0.0;
            if (grouping_ == SGrouping::consistent) {
                for (std::size_t q = 0; q < ni; ++q) sum += std::exp(dl[q]);
                t2 += s * (mx + std::log(sum));
            } else {
                for (std::size_t q = 0; q < ni; ++q) sum += std::exp(s * dl[q]);
                t2 += s * mx + std::log(sum);
            }
        }
        return -t1 / double(outer1_) + t2 / double(outer2_);
    }

    GmiWork w_;
    long n_;
    SGrouping grouping_;
    double d_;
    std::vector<cplx> noise_;
    std::size_t outer1_, outer2_;
    long chunk_;
    bool cached_, built_;
    std::vector<double> dl1_, lmax1_, dl2_, lmax2_;
};

} // namespace detail

// Monte-Carlo estimate of the exact mismatched-decoding metric, maximized
// over the auxiliary parameter s on [0.05, 5] (17-point log grid, s = 1
// force-included, golden-section refinement to relative width 1e-3). All s
// candidates share one noise table, so the supremum over the grid is exact
// sample-wise. Returned value is clamped below at 0; the std error is the
// per-sample standard deviation at s_opt divided by sqrt(samples).
inline GmiEstimate gmi_exact(const EffectiveChannel& e, const Alphabet& x,
                             const VectorAlphabet& i, const VectorAlphabet& j,
                             long mc_samples, std::uint64_t seed,
                             SGrouping grouping = SGrouping::consistent) {
    GmiEstimate est;
    est.samples = mc_samples;
    if (x.size() == 1) {
        // log|X| = 0 and the two expectation terms cancel for every s
        est.value_bits = 0.0;
        est.s_opt = 1.0;
        est.mc_std_error_bits = 0.0;
        return est;
    }
    detail::ExactEvaluator ev(e, x, i, j, mc_samples, seed, grouping);

    std::vector<double> grid;
    for (int k = 0; k <= 16; ++k) grid.push_back(0.05 * std::pow(100.0, k / 16.0));
    grid.push_back(1.0);
    std::sort(grid.begin(), grid.end());

    std::vector<double> vt, best_vt;
    double best_s = 1.0, best_mean = -std::numeric_limits<double>::infinity();
    auto means = ev.evaluate(grid, nullptr);
    for (std::size_t k = 0; k < grid.size(); ++k)
        if (means[k] > best_mean) {
            best_mean = means[k];
            best_s = grid[k];
        }

    const double ratio = std::pow(100.0, 1.0 / 16.0);
    double lo = std::max(0.05, best_s / ratio), hi = std::min(5.0, best_s * ratio);
    double la = std::log(lo), lb = std::log(hi);
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto eval_one = [&](double s) {
        auto mv = ev.evaluate({s}, &vt);
        if (mv[0] > best_mean) {
            best_mean = mv[0];
            best_s = s;
            best_vt = vt;
        }
        return mv[0];
    };
    double x1 = lb - invphi * (lb - la), x2 = la + invphi * (lb - la);
    double f1 = eval_one(std::exp(x1)), f2 = eval_one(std::exp(x2));
    while (hi / lo > 1.001 && lb - la > 1e-12) {
        if (f1 < f2) {
            la = x1; x1 = x2; f1 = f2;
            x2 = la + invphi * (lb - la);
            f2 = eval_one(std::exp(x2));
        } else {
            lb = x2; x2 = x1; f2 = f1;
            x1 = lb - invphi * (lb - la);
            f1 = eval_one(std::exp(x1));
        }
        lo = std::exp(la);
        hi = std::exp(lb);
    }
    if (best_vt.empty()) ev.evaluate({best_s}, &best_vt); // grid point won
    const double lognx = std::log(double(x.size()));
    double mean = 0.0;
    for (double v : best_vt) mean += v;
    mean = lognx + mean / double(best_vt.size());
    double var = 0.0;
    for (double v : best_vt) {
        const double dv = (lognx + v) - mean;
        var += dv * dv;
    }
    var /= double(best_vt.size() - 1);
    est.s_opt = best_s;
    est.value_bits = std::max(0.0, mean / std::numbers::ln2);
    est.mc_std_error_bits = std::sqrt(var / double(best_vt.size())) / std::numbers::ln2;
    return est;
}

} // namespace rsma
