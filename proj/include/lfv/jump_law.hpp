#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <random>
#include <vector>

#include "lfv/error.hpp"
#include "lfv/math.hpp"
#include "lfv/measure.hpp"
#include "lfv/random.hpp"
#include "lfv/rates.hpp"

namespace lfv {

/// One merger of the b-block chain: waiting time and number of merging blocks.
struct Jump {
    double dt = INFINITY;
    int k = 0;
};

/// Law of the next merger from b blocks: rate lambda_b, and k with probability
/// C(b,k) lambda_{b,k} / lambda_b. Rows up to row_cap are alias tables built on
/// first use; above the cap the paintbox sampler thins a dominating Poisson
/// stream of proposals x and draws k from Binomial(b, x) given k >= 2. Both
/// routes realize the same law. Safe to share between threads.
class JumpLaw {
public:
    explicit JumpLaw(LambdaMeasure mu, int row_cap = -1) : mu_(std::move(mu)) {
        if (row_cap < 0) row_cap = sweep_route(mu_) == SweepRoute::integral ? 64 : 1024;
        row_cap_ = std::max(2, row_cap);
        rows_ = std::make_unique<Row[]>(static_cast<std::size_t>(row_cap_ + 1));
        pieces_ = mu_.pieces();
    }

    const LambdaMeasure& measure() const { return mu_; }
    int row_cap() const { return row_cap_; }
    bool atoms_only() const { return pieces_.empty(); }

    /// lambda_b, the total merger rate from b blocks.
    double rate(int b) const {
        if (b < 2) return 0.0;
        if (atoms_only()) return mu_.atom0() * pairs(b) + mu_.atom1();
        if (b <= row_cap_) return row(b).rate;
        return rate_sums_integral(mu_, b).lambda_b;
    }

    Jump next(int b, Rng& rng) const {
        if (b < 2) throw AbsorbingStateError("no merger is possible with fewer than two blocks");
        if (mu_.is_zero()) return {};
        if (atoms_only()) {
            const double kingman = mu_.atom0() * pairs(b);
            const double total = kingman + mu_.atom1();
            Jump j;
            j.dt = exponential(rng, total);
            j.k = (b == 2 || uniform01(rng) * total < kingman) ? 2 : b;
            return j;
        }
        if (b <= row_cap_) {
            const Row& r = row(b);
            Jump j;
            j.dt = exponential(rng, r.rate);
            j.k = 2 + static_cast<int>(r.table.sample(rng));
            return j;
        }
        return paintbox(b, rng);
    }

    /// Paintbox route at any b >= 2; exposed so tests can compare it with rows.
    Jump paintbox(int b, Rng& rng) const {
        if (b < 2) throw AbsorbingStateError("no merger is possible with fewer than two blocks");
        const auto props = proposals(b);
        const double kingman = mu_.atom0() * pairs(b);
        double total = kingman + mu_.atom1();
        for (const auto& p : props) total += p.mass;
        if (!(total > 0.0)) return {};
        Jump j;
        j.dt = 0.0;
        for (int guard = 0; guard < 100'000'000; ++guard) {
            j.dt += exponential(rng, total);
            double u = uniform01(rng) * total;
            if (u < kingman) {
                j.k = 2;
                return j;
            }
            u -= kingman;
            if (u < mu_.atom1()) {
                j.k = b;
                return j;
            }
            u -= mu_.atom1();
            const Proposal* chosen = &props.back();
            for (const auto& p : props) {
                if (u < p.mass) {
                    chosen = &p;
                    break;
                }
                u -= p.mass;
            }
            const double x = chosen->draw(rng);
            const double target = pieces_[chosen->piece](x) * detail::binomial_tail_over_x2(b, x).p_ge2;
            const double bound = chosen->envelope(x);
            if (uniform01(rng) * bound < target) {
                j.k = binomial_at_least_two(b, x, rng);
                return j;
            }
        }
        throw NumericError("paintbox sampler failed to accept a proposal");
    }

    /// K ~ Binomial(b, x) conditioned on K >= 2.
    static int binomial_at_least_two(int b, double x, Rng& rng) {
        if (b == 2) return 2;
        if (b * x < 3.0) {
            const auto tail = detail::binomial_tail_over_x2(b, x);
            // Inverse CDF over k = 2.. on the x^-2-scaled terms.
            double t = pairs(b) * std::exp((b - 2) * std::log1p(-x));
            const double ratio = x / (1.0 - x);
            const double u = uniform01(rng) * tail.p_ge2;
            double acc = 0.0;
            for (int k = 2; k <= b; ++k) {
                acc += t;
                if (u < acc) return k;
                t *= static_cast<double>(b - k) / (k + 1) * ratio;
                if (t == 0.0) return k;
            }
            return b;
        }
        std::binomial_distribution<int> bin(b, x);
        for (;;) {
            int k = bin(rng);
            if (k >= 2) return k;
        }
    }

private:
    struct Row {
        std::once_flag once;
        double rate = 0.0;
        AliasTable table;
    };

    /// Dominating intensity on [lo, hi] of the form
    ///   scale * x^e           (kind 0)
    ///   scale * (1 - x)^e     (kind 1)
    /// with a matching exact sampler.
    struct Proposal {
        std::size_t piece = 0;
        int kind = 0;
        double lo = 0.0, hi = 1.0, e = 0.0, scale = 0.0, mass = 0.0;

        double envelope(double x) const { return kind == 0 ? scale * std::pow(x, e) : scale * std::pow(1.0 - x, e); }

        double draw(Rng& rng) const {
            const double u = uniform01(rng);
            if (kind == 0) return power_inverse(lo, hi, e, u);
            return 1.0 - power_inverse(1.0 - hi, 1.0 - lo, e, u);
        }

        /// Inverse CDF of the density proportional to y^e on [l, h].
        static double power_inverse(double l, double h, double e, double u) {
            if (e == -1.0) return l * std::exp(u * std::log(h / l));
            const double p = e + 1.0;
            const double lp = std::pow(l, p), hp = std::pow(h, p);
            double y = std::pow(lp + u * (hp - lp), 1.0 / p);
            return std::clamp(y, l, h);
        }

        static double power_mass(double l, double h, double e) {
            if (e == -1.0) return std::log(h / l);
            const double p = e + 1.0;
            return (std::pow(h, p) - std::pow(l, p)) / p;
        }
    };

    const Row& row(int b) const {
        Row& r = rows_[static_cast<std::size_t>(b)];
        std::call_once(r.once, [&] {
            const auto w = merger_weights(mu_, b);
            double total = 0.0;
            for (double x : w) total += x;
            r.rate = total;
            if (total > 0.0) r.table = AliasTable(w);
        });
        if (!(r.rate > 0.0)) throw DegenerateMeasureError("zero merger rate at b = " + std::to_string(b));
        return r;
    }

    /// Piecewise dominating intensities for rho(x) x^-2 P(Bin(b,x) >= 2), using
    /// P(Bin(b,x) >= 2) <= min(1, C(b,2) x^2); split at 1/2 and at C(b,2)^-1/2.
    std::vector<Proposal> proposals(int b) const {
        std::vector<Proposal> out;
        const double c2 = pairs(b);
        const double xstar = 1.0 / std::sqrt(c2);
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            const auto& p = pieces_[i];
            if (p.scale <= 0.0) continue;
            std::vector<double> cuts{p.lo, p.hi, xstar, 0.5};
            cuts.erase(std::remove_if(cuts.begin(), cuts.end(), [&](double x) { return !(x >= p.lo && x <= p.hi); }),
                       cuts.end());
            std::sort(cuts.begin(), cuts.end());
            cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
            for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
                const double l = cuts[s], h = cuts[s + 1];
                Proposal q;
                q.piece = i;
                q.lo = l;
                q.hi = h;
                // Supremum over [l, h] of the factor not used for sampling.
                auto sup_pow = [](double l0, double h0, double e) {
                    if (e == 0.0) return 1.0;
                    return e > 0.0 ? std::pow(h0, e) : std::pow(l0, e);
                };
                if (h <= 0.5) {
                    const double one_minus = sup_pow(1.0 - h, 1.0 - l, p.c);
                    q.kind = 0;
                    if (h <= xstar) {
                        q.e = p.a;
                        q.scale = p.scale * c2 * one_minus;
                    } else {
                        q.e = p.a - 2.0;
                        q.scale = p.scale * one_minus;
                    }
                    q.mass = q.scale * Proposal::power_mass(l, h, q.e);
                } else {
                    const double xfac = sup_pow(l, h, p.a - 2.0);
                    const double fac = h <= xstar ? std::min(c2 * sup_pow(l, h, p.a), xfac) : xfac;
                    q.kind = 1;
                    q.e = p.c;
                    q.scale = p.scale * fac;
                    q.mass = q.scale * Proposal::power_mass(1.0 - h, 1.0 - l, q.e);
                }
                if (q.mass > 0.0) out.push_back(q);
            }
        }
        return out;
    }

    LambdaMeasure mu_;
    int row_cap_ = 0;
    std::vector<PowerPiece> pieces_;
    std::unique_ptr<Row[]> rows_;
};

}  // namespace lfv
