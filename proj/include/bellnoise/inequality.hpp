#pragma once

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bellnoise/errors.hpp"
#include "bellnoise/qstate.hpp"
#include "bellnoise/rational.hpp"

namespace bellnoise {

// A bipartite Bell functional in CH form: signed rational coefficients on
// joint "0,0" probabilities and on one-sided "0" marginals, local bound 0
// for the built-ins. Outcome "0" is the projector outcome everywhere.
class BellFunctional {
public:
    BellFunctional(std::string name, int n_a, int n_b)
        : name_(std::move(name)), n_a_(n_a), n_b_(n_b) {
        if (n_a < 1 || n_b < 1) throw std::invalid_argument("settings counts must be positive");
        joint_.assign(static_cast<std::size_t>(n_a) * n_b, Rational(0));
        marg_a_.assign(n_a, Rational(0));
        marg_b_.assign(n_b, Rational(0));
    }

    const std::string& name() const noexcept { return name_; }
    int settings_a() const noexcept { return n_a_; }
    int settings_b() const noexcept { return n_b_; }

    const Rational& joint(int x, int y) const { return joint_.at(index(x, y)); }
    const Rational& marg_a(int x) const { return marg_a_.at(check_a(x)); }
    const Rational& marg_b(int y) const { return marg_b_.at(check_b(y)); }
    const Rational& bound() const noexcept { return bound_; }

    void set_joint(int x, int y, const Rational& c) { joint_.at(index(x, y)) = c; }
    void set_marg_a(int x, const Rational& c) { marg_a_.at(check_a(x)) = c; }
    void set_marg_b(int y, const Rational& c) { marg_b_.at(check_b(y)) = c; }
    void set_bound(const Rational& b) { bound_ = b; }

    bool has_joint_term() const {
        return std::any_of(joint_.begin(), joint_.end(),
                           [](const Rational& r) { return !r.is_zero(); });
    }

    BellFunctional scaled(const Rational& lambda) const {
        if (!lambda.positive()) throw std::invalid_argument("scale factor must be positive");
        BellFunctional out = *this;
        for (auto& c : out.joint_) c = c * lambda;
        for (auto& c : out.marg_a_) c = c * lambda;
        for (auto& c : out.marg_b_) c = c * lambda;
        out.bound_ = out.bound_ * lambda;
        return out;
    }

    static BellFunctional chsh() {
        BellFunctional f("CHSH", 2, 2);
        f.set_joint(0, 0, 1);
        f.set_joint(0, 1, 1);
        f.set_joint(1, 0, 1);
        f.set_joint(1, 1, -1);
        f.set_marg_a(0, -1);
        f.set_marg_b(0, -1);
        return f;
    }

    static BellFunctional i3322() {
        BellFunctional f("I3322", 3, 3);
        f.set_joint(0, 0, 1);
        f.set_joint(0, 1, 1);
        f.set_joint(0, 2, 1);
        f.set_joint(1, 0, 1);
        f.set_joint(1, 1, 1);
        f.set_joint(1, 2, -1);
        f.set_joint(2, 0, 1);
        f.set_joint(2, 1, -1);
        f.set_marg_a(0, -2);
        f.set_marg_a(1, -1);
        f.set_marg_b(0, -1);
        return f;
    }

    static BellFunctional a5() {
        BellFunctional f("A5", 4, 4);
        f.set_joint(0, 1, 1);
        f.set_joint(0, 2, 1);
        f.set_joint(0, 3, -1);
        f.set_joint(1, 0, 1);
        f.set_joint(1, 1, 1);
        f.set_joint(1, 2, -1);
        f.set_joint(1, 3, 1);
        f.set_joint(2, 0, 1);
        f.set_joint(2, 2, 1);
        f.set_joint(2, 3, 1);
        f.set_joint(3, 0, 1);
        f.set_joint(3, 3, -1);
        f.set_marg_a(0, -1);
        f.set_marg_a(1, -1);
        f.set_marg_a(2, -2);
        f.set_marg_b(0, -1);
        f.set_marg_b(1, -1);
        return f;
    }

    static BellFunctional builtin(std::string_view name) {
        std::string lower(name);
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (lower == "chsh") return chsh();
        if (lower == "i3322") return i3322();
        if (lower == "a5") return a5();
        throw std::invalid_argument("unknown built-in inequality: " + std::string(name));
    }

    static BellFunctional parse(const std::string& text, std::string name = "custom");
    std::string serialize() const;

private:
    std::size_t index(int x, int y) const {
        check_a(x);
        check_b(y);
        return static_cast<std::size_t>(x) * n_b_ + y;
    }
    int check_a(int x) const {
        if (x < 0 || x >= n_a_) throw std::out_of_range("Alice setting index out of range");
        return x;
    }
    int check_b(int y) const {
        if (y < 0 || y >= n_b_) throw std::out_of_range("Bob setting index out of range");
        return y;
    }

    std::string name_;
    int n_a_, n_b_;
    std::vector<Rational> joint_;  // row-major, x * n_b + y
    std::vector<Rational> marg_a_;
    std::vector<Rational> marg_b_;
    Rational bound_ = Rational(0);
};

// One measurement setting per party index; lengths must match the functional.
struct SettingsAssignment {
    std::vector<MeasurementSetting> alice;
    std::vector<MeasurementSetting> bob;
};

// (J, K_A, K_B) split of the functional value. J collects the joint terms,
// K_A / K_B the one-sided marginal terms, so that detector efficiencies
// enter as a polynomial: each term picks up one factor of eta per detector
// involved in it.
struct EfficiencyDecomposition {
    double j = 0.0;
    double k_a = 0.0;
    double k_b = 0.0;

    double ideal_value() const noexcept { return j + k_a + k_b; }
};

inline EfficiencyDecomposition evaluate(const BellFunctional& f, const TwoQubitState& rho,
                                        const SettingsAssignment& s) {
    if (static_cast<int>(s.alice.size()) != f.settings_a() ||
        static_cast<int>(s.bob.size()) != f.settings_b())
        throw std::invalid_argument("settings assignment does not match functional dimensions");

    EfficiencyDecomposition d;
    for (int x = 0; x < f.settings_a(); ++x)
        for (int y = 0; y < f.settings_b(); ++y) {
            const Rational& c = f.joint(x, y);
            if (c.is_zero()) continue;
            d.j += c.to_double() * joint_prob(rho, s.alice[x], s.bob[y]);
        }
    for (int x = 0; x < f.settings_a(); ++x) {
        const Rational& c = f.marg_a(x);
        if (c.is_zero()) continue;
        d.k_a += c.to_double() * marginal_prob(rho, Side::A, s.alice[x]);
    }
    for (int y = 0; y < f.settings_b(); ++y) {
        const Rational& c = f.marg_b(y);
        if (c.is_zero()) continue;
        d.k_b += c.to_double() * marginal_prob(rho, Side::B, s.bob[y]);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Text format, line based, '#' comments:
//   settings A=<n_A> B=<n_B>
//   J <x> <y> <coeff>      joint term
//   MA <x> <coeff>         Alice marginal
//   MB <y> <coeff>         Bob marginal
//   bound <rational>
// Coefficients are decimal integers or p/q rationals. Omitted entries are 0;
// duplicate entries are errors.

inline BellFunctional BellFunctional::parse(const std::string& text, std::string name) {
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    bool have_settings = false;
    bool have_bound = false;
    std::set<std::pair<int, int>> seen_joint;
    std::set<int> seen_ma, seen_mb;
    BellFunctional f(std::move(name), 1, 1);

    auto tokens_of = [](const std::string& line) {
        std::vector<std::string> toks;
        std::istringstream ls(line);
        std::string t;
        while (ls >> t) toks.push_back(t);
        return toks;
    };

    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
        const auto toks = tokens_of(line);
        if (toks.empty()) continue;

        if (!have_settings) {
            if (toks[0] != "settings")
                throw parse_error("missing 'settings A=<n> B=<n>' header", line_no);
            if (toks.size() != 3 || toks[1].rfind("A=", 0) != 0 || toks[2].rfind("B=", 0) != 0)
                throw parse_error("malformed settings header", line_no);
            int n_a = 0, n_b = 0;
            try {
                n_a = std::stoi(toks[1].substr(2));
                n_b = std::stoi(toks[2].substr(2));
            } catch (const std::exception&) {
                throw parse_error("malformed settings header", line_no);
            }
            if (n_a < 1 || n_b < 1 || n_a > 64 || n_b > 64)
                throw parse_error("settings counts must be in [1, 64]", line_no);
            f = BellFunctional(f.name(), n_a, n_b);
            have_settings = true;
            continue;
        }

        auto parse_index = [&](const std::string& tok, int limit, const char* side) {
            int v = -1;
            try {
                v = std::stoi(tok);
            } catch (const std::exception&) {
                throw parse_error(std::string("bad ") + side + " index '" + tok + "'", line_no);
            }
            if (v < 0 || v >= limit)
                throw parse_error(std::string(side) + " index " + tok +
                                      " out of range (settings count " + std::to_string(limit) + ")",
                                  line_no);
            return v;
        };
        auto parse_coeff = [&](const std::string& tok) {
            try {
                return Rational::parse(tok);
            } catch (const std::exception&) {
                throw parse_error("bad coefficient '" + tok + "' (integers or p/q only)", line_no);
            }
        };

        if (toks[0] == "J") {
            if (toks.size() != 4) throw parse_error("expected 'J <x> <y> <coeff>'", line_no);
            const int x = parse_index(toks[1], f.settings_a(), "Alice");
            const int y = parse_index(toks[2], f.settings_b(), "Bob");
            if (!seen_joint.insert({x, y}).second)
                throw parse_error("duplicate joint coefficient J " + toks[1] + " " + toks[2], line_no);
            f.set_joint(x, y, parse_coeff(toks[3]));
        } else if (toks[0] == "MA") {
            if (toks.size() != 3) throw parse_error("expected 'MA <x> <coeff>'", line_no);
            const int x = parse_index(toks[1], f.settings_a(), "Alice");
            if (!seen_ma.insert(x).second)
                throw parse_error("duplicate Alice marginal MA " + toks[1], line_no);
            f.set_marg_a(x, parse_coeff(toks[2]));
        } else if (toks[0] == "MB") {
            if (toks.size() != 3) throw parse_error("expected 'MB <y> <coeff>'", line_no);
            const int y = parse_index(toks[1], f.settings_b(), "Bob");
            if (!seen_mb.insert(y).second)
                throw parse_error("duplicate Bob marginal MB " + toks[1], line_no);
            f.set_marg_b(y, parse_coeff(toks[2]));
        } else if (toks[0] == "bound") {
            if (toks.size() != 2) throw parse_error("expected 'bound <rational>'", line_no);
            if (have_bound) throw parse_error("duplicate bound line", line_no);
            f.set_bound(parse_coeff(toks[1]));
            have_bound = true;
        } else {
            throw parse_error("unknown directive '" + toks[0] + "'", line_no);
        }
    }

    if (!have_settings) throw parse_error("missing 'settings A=<n> B=<n>' header");
    if (!f.has_joint_term()) throw parse_error("functional has no nonzero joint coefficient");
    return f;
}

inline std::string BellFunctional::serialize() const {
    std::ostringstream out;
    out << "settings A=" << n_a_ << " B=" << n_b_ << "\n";
    for (int x = 0; x < n_a_; ++x)
        for (int y = 0; y < n_b_; ++y)
            if (!joint(x, y).is_zero())
                out << "J " << x << " " << y << " " << joint(x, y).str() << "\n";
    for (int x = 0; x < n_a_; ++x)
        if (!marg_a(x).is_zero()) out << "MA " << x << " " << marg_a(x).str() << "\n";
    for (int y = 0; y < n_b_; ++y)
        if (!marg_b(y).is_zero()) out << "MB " << y << " " << marg_b(y).str() << "\n";
    out << "bound " << bound_.str() << "\n";
    return out.str();
}

} // namespace bellnoise
