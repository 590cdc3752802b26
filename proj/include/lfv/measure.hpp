#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "lfv/error.hpp"
#include "lfv/format.hpp"
#include "lfv/math.hpp"

namespace lfv {

/// scale * x^a * (1 - x)^c restricted to [lo, hi] (a, c > -1 where the
/// interval touches 0 resp. 1).
struct PowerPiece {
    double lo = 0.0;
    double hi = 1.0;
    double scale = 0.0;
    double a = 0.0;
    double c = 0.0;

    double operator()(double x) const {
        if (x < lo || x > hi) return 0.0;
        return scale * std::pow(x, a) * std::pow(1.0 - x, c);
    }
};

/// Beta(2 - beta, beta) probability density, beta in (0, 2).
struct BetaDensity {
    double beta = 1.5;
};

/// c * x^(-gamma) on [0, eps], zero elsewhere.
struct PowerLawDensity {
    double c = 1.0;
    double gamma = 0.5;
    double eps = 0.5;
};

/// Piecewise-constant density: values[i] on [edges[i], edges[i+1]).
struct TableDensity {
    std::vector<double> edges;
    std::vector<double> values;
};

using Density = std::variant<std::monostate, BetaDensity, PowerLawDensity, TableDensity>;

/// Finite measure on [0, 1]: atoms at 0 and 1 plus an absolutely continuous part.
class LambdaMeasure {
public:
    LambdaMeasure() = default;

    LambdaMeasure(double atom0, double atom1, Density density)
        : atom0_(atom0), atom1_(atom1), density_(std::move(density)) {
        validate();
        density_mass_ = compute_density_mass();
        total_mass_ = atom0_ + atom1_ + density_mass_;
    }

    static LambdaMeasure zero() { return {}; }
    static LambdaMeasure kingman(double mass = 1.0) { return {mass, 0.0, std::monostate{}}; }
    static LambdaMeasure delta1(double mass = 1.0) { return {0.0, mass, std::monostate{}}; }
    static LambdaMeasure beta(double b) { return {0.0, 0.0, BetaDensity{b}}; }
    static LambdaMeasure powerlaw(double c, double gamma, double eps) {
        return {0.0, 0.0, PowerLawDensity{c, gamma, eps}};
    }
    static LambdaMeasure table(std::vector<double> edges, std::vector<double> values) {
        return {0.0, 0.0, TableDensity{std::move(edges), std::move(values)}};
    }

    double atom0() const { return atom0_; }
    double atom1() const { return atom1_; }
    const Density& density() const { return density_; }
    bool has_density() const { return !std::holds_alternative<std::monostate>(density_); }
    double density_mass() const { return density_mass_; }
    double total_mass() const { return total_mass_; }
    bool is_zero() const { return total_mass_ == 0.0; }

    const BetaDensity* as_beta() const { return std::get_if<BetaDensity>(&density_); }
    const PowerLawDensity* as_powerlaw() const { return std::get_if<PowerLawDensity>(&density_); }
    const TableDensity* as_table() const { return std::get_if<TableDensity>(&density_); }

    /// The density as a list of power pieces; empty when there is none.
    std::vector<PowerPiece> pieces() const {
        std::vector<PowerPiece> out;
        std::visit(
            [&](const auto& d) {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, BetaDensity>) {
                    out.push_back({0.0, 1.0, std::exp(-log_beta(2.0 - d.beta, d.beta)), 1.0 - d.beta, d.beta - 1.0});
                } else if constexpr (std::is_same_v<T, PowerLawDensity>) {
                    out.push_back({0.0, d.eps, d.c, -d.gamma, 0.0});
                } else if constexpr (std::is_same_v<T, TableDensity>) {
                    for (std::size_t i = 0; i + 1 < d.edges.size(); ++i)
                        if (d.values[i] > 0.0) out.push_back({d.edges[i], d.edges[i + 1], d.values[i], 0.0, 0.0});
                }
            },
            density_);
        return out;
    }

    double density_at(double x) const {
        double v = 0.0;
        for (const auto& p : pieces()) v += p(x);
        return v;
    }

    /// Canonical compact spec string; parse_measure(describe()) == *this.
    std::string describe() const {
        std::string dens;
        std::visit(
            [&](const auto& d) {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, BetaDensity>) {
                    dens = "beta=" + format_double(d.beta);
                } else if constexpr (std::is_same_v<T, PowerLawDensity>) {
                    dens = "powerlaw=c=" + format_double(d.c) + ",gamma=" + format_double(d.gamma) +
                           ",eps=" + format_double(d.eps);
                } else if constexpr (std::is_same_v<T, TableDensity>) {
                    dens = "table=edges=";
                    for (std::size_t i = 0; i < d.edges.size(); ++i)
                        dens += (i ? ";" : "") + format_double(d.edges[i]);
                    dens += ",values=";
                    for (std::size_t i = 0; i < d.values.size(); ++i)
                        dens += (i ? ";" : "") + format_double(d.values[i]);
                }
            },
            density_);
        std::vector<std::string> parts;
        if (atom0_ > 0.0) parts.push_back("delta0=" + format_double(atom0_));
        if (atom1_ > 0.0) parts.push_back("delta1=" + format_double(atom1_));
        if (!dens.empty()) parts.push_back(dens);
        if (parts.empty()) return "zero";
        if (parts.size() == 1) {
            auto eq = parts[0].find('=');
            return parts[0].substr(0, eq) + ":" + parts[0].substr(eq + 1);
        }
        std::string s = "mix:";
        for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? "+" : "") + parts[i];
        return s;
    }

    friend bool operator==(const LambdaMeasure& x, const LambdaMeasure& y) {
        auto same_density = std::visit(
            [&](const auto& d) {
                using T = std::decay_t<decltype(d)>;
                const T* o = std::get_if<T>(&y.density_);
                if (!o) return false;
                if constexpr (std::is_same_v<T, std::monostate>) return true;
                else if constexpr (std::is_same_v<T, BetaDensity>) return d.beta == o->beta;
                else if constexpr (std::is_same_v<T, PowerLawDensity>)
                    return d.c == o->c && d.gamma == o->gamma && d.eps == o->eps;
                else return d.edges == o->edges && d.values == o->values;
            },
            x.density_);
        return same_density && x.atom0_ == y.atom0_ && x.atom1_ == y.atom1_;
    }

private:
    void validate() const {
        if (!(atom0_ >= 0.0) || !(atom1_ >= 0.0) || !std::isfinite(atom0_) || !std::isfinite(atom1_))
            throw ArgumentError("atom masses must be finite and nonnegative");
        std::visit(
            [](const auto& d) {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, BetaDensity>) {
                    if (!(d.beta > 0.0 && d.beta < 2.0)) throw ArgumentError("beta density requires beta in (0, 2)");
                } else if constexpr (std::is_same_v<T, PowerLawDensity>) {
                    if (!(d.c > 0.0) || !std::isfinite(d.c)) throw ArgumentError("powerlaw requires c > 0");
                    if (!(d.gamma > 0.0 && d.gamma < 1.0)) throw ArgumentError("powerlaw requires gamma in (0, 1)");
                    if (!(d.eps > 0.0 && d.eps < 1.0)) throw ArgumentError("powerlaw requires eps in (0, 1)");
                } else if constexpr (std::is_same_v<T, TableDensity>) {
                    if (d.edges.size() < 2 || d.values.size() + 1 != d.edges.size())
                        throw ArgumentError("table density needs k+1 edges and k values (k >= 1)");
                    if (d.edges.front() < 0.0 || d.edges.back() > 1.0)
                        throw ArgumentError("table edges must lie in [0, 1]");
                    for (std::size_t i = 0; i + 1 < d.edges.size(); ++i)
                        if (!(d.edges[i] < d.edges[i + 1])) throw ArgumentError("table edges must increase strictly");
                    for (double v : d.values)
                        if (!(v >= 0.0) || !std::isfinite(v)) throw ArgumentError("table values must be finite and nonnegative");
                }
            },
            density_);
    }

    double compute_density_mass() const {
        return std::visit(
            [](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, std::monostate>) return 0.0;
                else if constexpr (std::is_same_v<T, BetaDensity>) return 1.0;
                else if constexpr (std::is_same_v<T, PowerLawDensity>)
                    return d.c * std::pow(d.eps, 1.0 - d.gamma) / (1.0 - d.gamma);
                else {
                    double m = 0.0;
                    for (std::size_t i = 0; i < d.values.size(); ++i) m += d.values[i] * (d.edges[i + 1] - d.edges[i]);
                    return m;
                }
            },
            density_);
    }

    double atom0_ = 0.0;
    double atom1_ = 0.0;
    Density density_{};
    double density_mass_ = 0.0;
    double total_mass_ = 0.0;
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

inline std::vector<double> parse_list(std::string_view s, std::string_view what) {
    std::vector<double> out;
    for (auto tok : split(s, ';')) out.push_back(parse_double(tok, what));
    return out;
}

/// "c=1,gamma=0.5,eps=0.5"
inline PowerLawDensity parse_powerlaw(std::string_view body) {
    PowerLawDensity p{};
    bool seen_c = false, seen_g = false, seen_e = false;
    for (auto kv : split(body, ',')) {
        auto eq = kv.find('=');
        if (eq == std::string_view::npos) throw ArgumentError("powerlaw parameter without '=': " + std::string(kv));
        auto key = kv.substr(0, eq);
        double v = parse_double(kv.substr(eq + 1), key);
        if (key == "c") p.c = v, seen_c = true;
        else if (key == "gamma") p.gamma = v, seen_g = true;
        else if (key == "eps") p.eps = v, seen_e = true;
        else throw ArgumentError("unknown powerlaw parameter '" + std::string(key) + "'");
    }
    if (!seen_c || !seen_g || !seen_e) throw ArgumentError("powerlaw needs c, gamma and eps");
    return p;
}

/// "edges=0;0.5;1,values=2;1"
inline TableDensity parse_table(std::string_view body) {
    TableDensity t;
    for (auto kv : split(body, ',')) {
        auto eq = kv.find('=');
        if (eq == std::string_view::npos) throw ArgumentError("table parameter without '=': " + std::string(kv));
        auto key = kv.substr(0, eq);
        if (key == "edges") t.edges = parse_list(kv.substr(eq + 1), "table edges");
        else if (key == "values") t.values = parse_list(kv.substr(eq + 1), "table values");
        else throw ArgumentError("unknown table parameter '" + std::string(key) + "'");
    }
    return t;
}

}  // namespace detail

/// Parses the compact measure syntax:
///   zero | delta0:m | delta1:m | beta:b | powerlaw:c=..,gamma=..,eps=..
///   | table:edges=e0;e1;..,values=v1;.. | mix:<part>+<part>+...
/// where a mix part is `delta0=m`, `delta1=m`, `beta=b`, `powerlaw=<params>`
/// or `table=<params>`, with at most one density part.
inline LambdaMeasure parse_measure(std::string_view spec) {
    if (spec == "zero") return LambdaMeasure::zero();
    auto colon = spec.find(':');
    if (colon == std::string_view::npos) throw ArgumentError("measure spec needs 'kind:params': " + std::string(spec));
    auto kind = spec.substr(0, colon);
    auto body = spec.substr(colon + 1);

    double atom0 = 0.0, atom1 = 0.0;
    Density density{};
    auto apply = [&](std::string_view k, std::string_view b) {
        if (k == "delta0") {
            atom0 += parse_double(b, "delta0 mass");
        } else if (k == "delta1") {
            atom1 += parse_double(b, "delta1 mass");
        } else {
            if (!std::holds_alternative<std::monostate>(density))
                throw ArgumentError("a measure can carry at most one density part");
            if (k == "beta") density = BetaDensity{parse_double(b, "beta")};
            else if (k == "powerlaw") density = detail::parse_powerlaw(b);
            else if (k == "table") density = detail::parse_table(b);
            else throw ArgumentError("unknown measure kind '" + std::string(k) + "'");
        }
    };

    if (kind == "mix") {
        for (auto part : detail::split(body, '+')) {
            auto eq = part.find('=');
            if (eq == std::string_view::npos) throw ArgumentError("mix component needs 'kind=params': " + std::string(part));
            apply(part.substr(0, eq), part.substr(eq + 1));
        }
    } else {
        apply(kind, body);
    }
    return {atom0, atom1, std::move(density)};
}

}  // namespace lfv
