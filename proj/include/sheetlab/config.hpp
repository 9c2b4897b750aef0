#pragma once
//
// Run configuration: an INI-style text with sections [fields], [grid],
// [experiment], [norris] and [output]. Lines are `key = value`; `#` starts a
// comment. Lists use commas; vector-valued entries (field components, pinned
// directions) separate components with `;` or commas as documented per key.
//
//   [fields]
//   preset = grushin            # or: preset = custom, with A0 = ... ; ...
//   A1 = 1 ; x1                 # prefix expressions, one per component
//
// Parsing collects every problem with its line number instead of stopping at
// the first one.

#include "sheetlab/error.hpp"
#include "sheetlab/expr.hpp"
#include "sheetlab/fieldkit.hpp"
#include "sheetlab/malliavin.hpp"
#include "sheetlab/norris.hpp"
#include "sheetlab/presets.hpp"

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace sheetlab {

inline constexpr const char* kExperimentKinds[] = {"simulate", "hormander", "malliavin", "probe",
                                                   "norris",   "density",   "converge"};

struct ConfigIssue {
    std::size_t line = 0;  // 0 when not tied to a line
    std::string message;

    [[nodiscard]] std::string str() const {
        return line ? "line " + std::to_string(line) + ": " + message : message;
    }
};

struct RunConfig {
    std::string kind = "simulate";

    // [fields]
    std::string preset = "additive";
    std::size_t dimension = 2;
    std::map<std::size_t, std::string> custom;  // coefficient index -> component text
    Regime regime = Regime::smooth;
    DeclaredBounds bounds;

    // [grid]
    double s = 1.0;
    double t = 1.0;
    std::size_t n_s = 32;
    std::size_t n_t = 32;

    // [experiment]
    std::vector<double> x0;
    std::optional<std::vector<double>> z;  // (s, t), snapped to the grid; default: far corner
    std::size_t trials = 1000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::vector<double> eps{0.2, 0.1, 0.05};
    std::size_t directions = 8;
    std::vector<std::vector<double>> pinned;
    MalliavinStrategy strategy = MalliavinStrategy::exact;
    std::size_t subsample = 4096;
    std::size_t depth = 2;
    double moment = 1.0;
    double requested_p = 1.0;
    std::size_t levels = 4;
    std::size_t base = 16;
    std::size_t resolution = 64;
    std::size_t probes = 64;
    std::uint32_t trial = 0;

    // [norris]
    std::string norris_spec = "brownian";
    NorrisConfig norris;
    NorrisRegime norris_regime = NorrisRegime::regular;
    double norris_beta = 0.75;
    std::optional<double> norris_beta_prime;
    std::vector<double> norris_v;
    std::string norris_V = "A1";

    // [output]
    std::string out_dir = "out";

    // Normalised key/value pairs for the provenance echo ("section.key").
    std::map<std::string, std::string> settings;
};

struct ParseResult {
    std::optional<RunConfig> config;
    std::vector<ConfigIssue> errors;
    std::vector<ConfigIssue> warnings;

    [[nodiscard]] bool ok() const { return config.has_value(); }
    [[nodiscard]] std::string error_text() const {
        std::string s;
        for (const auto& e : errors) s += e.str() + "\n";
        return s;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto p = s.find(sep, start);
        out.emplace_back(trim(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start)));
        if (p == std::string_view::npos) break;
        start = p + 1;
    }
    return out;
}

inline std::optional<double> to_double(std::string_view s) {
    s = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline std::optional<std::uint64_t> to_uint(std::string_view s) {
    s = trim(s);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline std::optional<std::vector<double>> to_doubles(std::string_view s, char sep = ',') {
    std::vector<double> out;
    for (const auto& part : split(s, sep)) {
        auto v = to_double(part);
        if (!v) return std::nullopt;
        out.push_back(*v);
    }
    return out;
}

}  // namespace detail

inline const std::map<std::string, std::set<std::string>>& config_schema() {
    static const std::map<std::string, std::set<std::string>> schema{
        {"fields", {"preset", "dimension", "regime", "K", "gamma", "K_gamma", "beta", "K_beta"}},
        {"grid", {"s", "t", "n_s", "n_t", "n"}},
        {"experiment",
         {"kind", "x0", "z", "trials", "seed", "workers", "eps", "directions", "pin", "strategy", "subsample",
          "depth", "moment", "p", "levels", "base", "resolution", "probes", "trial"}},
        {"norris",
         {"spec", "alpha1", "alpha2", "rho", "nu", "eps", "trials", "s", "steps", "regime", "beta", "beta_prime",
          "v", "V"}},
        {"output", {"dir"}},
    };
    return schema;
}

// Builds the coefficient fields a configuration describes.
inline FieldSet build_fields(const RunConfig& c) {
    if (c.preset != "custom") return presets::by_name(c.preset, c.dimension);
    if (c.custom.empty()) throw ConfigError("custom fields need at least A1");
    const std::size_t d = c.custom.rbegin()->first;
    if (d == 0) throw ConfigError("custom fields need at least one noise coefficient");
    std::vector<FieldExpr> fields;
    for (std::size_t l = 0; l <= d; ++l) {
        FieldExpr f;
        f.label = "A" + std::to_string(l);
        auto it = c.custom.find(l);
        if (it == c.custom.end()) {
            if (l > 0) throw ConfigError("custom field A" + std::to_string(l) + " is missing");
            f = presets::zero_field(c.dimension);
            f.label = "A0";
        } else {
            for (const auto& part : detail::split(it->second, ';')) f.components.push_back(parse_expr(part, c.dimension));
            if (f.components.size() != c.dimension)
                throw DimensionError("custom field A" + std::to_string(l) + " has " +
                                     std::to_string(f.components.size()) + " components, expected " +
                                     std::to_string(c.dimension));
        }
        fields.push_back(std::move(f));
    }
    return FieldSet("custom", c.dimension, std::move(fields), c.regime, c.bounds);
}

inline ParseResult parse_config(std::string_view text) {
    ParseResult res;
    RunConfig c;
    std::string section;
    std::map<std::string, std::size_t> key_line;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t lineno = 0;
    const auto& schema = config_schema();

    auto err = [&](std::size_t line, std::string msg) { res.errors.push_back({line, std::move(msg)}); };
    auto warn = [&](std::size_t line, std::string msg) { res.warnings.push_back({line, std::move(msg)}); };

    std::vector<std::tuple<std::string, std::string, std::string, std::size_t>> entries;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line = raw;
        if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                err(lineno, "malformed section header");
                continue;
            }
            section = std::string(detail::trim(line.substr(1, line.size() - 2)));
            if (!schema.contains(section)) err(lineno, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            err(lineno, "expected key = value");
            continue;
        }
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string value(detail::trim(line.substr(eq + 1)));
        if (section.empty()) {
            err(lineno, "key '" + key + "' outside any section");
            continue;
        }
        if (!schema.contains(section)) continue;
        const bool custom_field = section == "fields" && key.size() >= 2 && key[0] == 'A' &&
                                  detail::to_uint(std::string_view(key).substr(1)).has_value();
        if (!custom_field && !schema.at(section).contains(key)) {
            err(lineno, "unknown key '" + key + "' in [" + section + "]");
            continue;
        }
        const std::string full = section + "." + key;
        if (key_line.contains(full)) warn(lineno, "duplicate key '" + full + "' overrides line " + std::to_string(key_line[full]));
        key_line[full] = lineno;
        entries.emplace_back(section, key, value, lineno);
    }

    for (const auto& [sec, key, value, ln] : entries) {
        const std::size_t line = ln;
        auto num = [&](double& out) {
            if (auto v = detail::to_double(value)) out = *v;
            else err(line, "'" + key + "' expects a number, got '" + value + "'");
        };
        auto count = [&](std::size_t& out) {
            if (auto v = detail::to_uint(value)) out = static_cast<std::size_t>(*v);
            else err(line, "'" + key + "' expects a non-negative integer, got '" + value + "'");
        };
        auto list = [&](std::vector<double>& out) {
            if (auto v = detail::to_doubles(value)) out = *v;
            else err(line, "'" + key + "' expects a comma-separated list of numbers");
        };
        if (!(sec == "experiment" && key == "workers")) c.settings[sec + "." + key] = value;

        if (sec == "fields") {
            if (key == "preset") c.preset = value;
            else if (key == "dimension") count(c.dimension);
            else if (key == "regime") {
                if (auto r = parse_regime(value)) c.regime = *r;
                else err(line, "unknown regime '" + value + "'");
            } else if (key == "K") num(c.bounds.K);
            else if (key == "gamma") num(c.bounds.gamma);
            else if (key == "K_gamma") num(c.bounds.K_gamma);
            else if (key == "beta") {
                double b = 0;
                num(b);
                c.bounds.beta = b;
            } else if (key == "K_beta") num(c.bounds.K_beta);
            else c.custom[static_cast<std::size_t>(*detail::to_uint(std::string_view(key).substr(1)))] = value;
        } else if (sec == "grid") {
            if (key == "s") num(c.s);
            else if (key == "t") num(c.t);
            else if (key == "n_s") count(c.n_s);
            else if (key == "n_t") count(c.n_t);
            else if (key == "n") {
                count(c.n_s);
                c.n_t = c.n_s;
            }
        } else if (sec == "experiment") {
            if (key == "kind") c.kind = value;
            else if (key == "x0") list(c.x0);
            else if (key == "z") {
                std::vector<double> z;
                list(z);
                c.z = z;
            } else if (key == "trials") count(c.trials);
            else if (key == "seed") {
                if (auto v = detail::to_uint(value)) c.seed = *v;
                else err(line, "'seed' expects a non-negative integer");
            } else if (key == "workers") {
                std::size_t w = 1;
                count(w);
                c.workers = static_cast<unsigned>(std::max<std::size_t>(w, 1));
            } else if (key == "eps") list(c.eps);
            else if (key == "directions") count(c.directions);
            else if (key == "pin") {
                c.pinned.clear();
                for (const auto& part : detail::split(value, ';')) {
                    if (auto v = detail::to_doubles(part)) c.pinned.push_back(*v);
                    else err(line, "'pin' expects directions like '0, 1 ; 1, 0'");
                }
            } else if (key == "strategy") {
                if (auto s = parse_strategy(value)) c.strategy = *s;
                else err(line, "unknown Malliavin strategy '" + value + "'");
            } else if (key == "subsample") count(c.subsample);
            else if (key == "depth") count(c.depth);
            else if (key == "moment") num(c.moment);
            else if (key == "p") num(c.requested_p);
            else if (key == "levels") count(c.levels);
            else if (key == "base") count(c.base);
            else if (key == "resolution") count(c.resolution);
            else if (key == "probes") count(c.probes);
            else if (key == "trial") {
                std::size_t t = 0;
                count(t);
                c.trial = static_cast<std::uint32_t>(t);
            }
        } else if (sec == "norris") {
            if (key == "spec") c.norris_spec = value;
            else if (key == "alpha1") num(c.norris.alpha1);
            else if (key == "alpha2") num(c.norris.alpha2);
            else if (key == "rho") num(c.norris.rho);
            else if (key == "nu") num(c.norris.nu);
            else if (key == "eps") list(c.norris.eps);
            else if (key == "trials") count(c.norris.trials);
            else if (key == "s") num(c.norris.s);
            else if (key == "steps") count(c.norris.steps);
            else if (key == "regime") {
                if (value == "regular") c.norris_regime = NorrisRegime::regular;
                else if (value == "irregular") c.norris_regime = NorrisRegime::irregular;
                else err(line, "norris regime must be 'regular' or 'irregular'");
            } else if (key == "beta") num(c.norris_beta);
            else if (key == "beta_prime") {
                double b = 0;
                num(b);
                c.norris_beta_prime = b;
            } else if (key == "v") list(c.norris_v);
            else if (key == "V") c.norris_V = value;
        } else if (sec == "output") {
            if (key == "dir") c.out_dir = value;
        }
    }

    auto line_of = [&](const std::string& k) { return key_line.contains(k) ? key_line.at(k) : std::size_t{0}; };

    if (std::find(std::begin(kExperimentKinds), std::end(kExperimentKinds), c.kind) == std::end(kExperimentKinds))
        err(line_of("experiment.kind"), "unknown experiment kind '" + c.kind + "'");
    if (c.dimension == 0) err(line_of("fields.dimension"), "dimension must be positive");

    std::optional<FieldSet> fs;
    if (res.errors.empty()) {
        try {
            fs = build_fields(c);
        } catch (const Error& e) {
            std::size_t ln = line_of("fields.preset");
            if (c.preset == "custom") {
                for (const char* k : {"fields.beta", "fields.gamma", "fields.regime"})
                    if (key_line.contains(k)) ln = key_line.at(k);
            }
            err(ln, e.what());
        }
    }
    if (fs) {
        if (c.x0.empty()) c.x0.assign(fs->m(), 0.0);
        if (c.x0.size() != fs->m())
            err(line_of("experiment.x0"), "x0 has " + std::to_string(c.x0.size()) + " entries, fields need " +
                                              std::to_string(fs->m()));
        for (const auto& p : c.pinned)
            if (p.size() != fs->m()) err(line_of("experiment.pin"), "pinned direction has the wrong dimension");
        if (!c.norris_v.empty() && c.norris_v.size() != fs->m())
            err(line_of("norris.v"), "norris v has the wrong dimension");
    }
    if (!(c.s > 0.0) || !(c.t > 0.0)) err(line_of("grid.s"), "grid extents must be positive");
    if (c.n_s == 0 || c.n_t == 0) err(line_of("grid.n_s"), "grid cell counts must be positive");
    if (c.z) {
        if (c.z->size() != 2) err(line_of("experiment.z"), "z expects two coordinates 's, t'");
        else if (!((*c.z)[0] > 0.0 && (*c.z)[1] > 0.0))
            err(line_of("experiment.z"), "z must lie off the axes (s t != 0)");
        else if ((*c.z)[0] > c.s * (1 + 1e-12) || (*c.z)[1] > c.t * (1 + 1e-12))
            err(line_of("experiment.z"), "z lies outside the grid");
    }
    if (c.trials == 0) err(line_of("experiment.trials"), "trials must be positive");
    if (c.kind == "probe") {
        if (c.eps.size() < 3) err(line_of("experiment.eps"), "probe needs at least 3 eps values");
        for (double e : c.eps)
            if (!(e > 0.0 && e < 1.0)) err(line_of("experiment.eps"), "eps values must lie in (0,1)");
        if (c.trials < 1000) err(line_of("experiment.trials"), "probe needs at least 1000 trials");
    }
    if (c.kind == "converge" && c.levels < 2) err(line_of("experiment.levels"), "converge needs at least 2 levels");
    if (c.kind == "malliavin" && !(c.moment >= 1.0)) err(line_of("experiment.moment"), "moment order must be >= 1");
    if (c.norris_spec != "brownian" && c.norris_spec != "spde")
        err(line_of("norris.spec"), "norris spec must be 'brownian' or 'spde'");

    // Exponent arithmetic of the small-ball bounds.
    const bool norris_used = c.kind == "norris" || std::any_of(key_line.begin(), key_line.end(), [](const auto& kv) {
                                 return kv.first.starts_with("norris.");
                             });
    if (norris_used) {
        const NorrisValidation nv = validate_norris(c.norris, c.norris_regime, c.norris_beta, c.norris_beta_prime);
        std::size_t ln = line_of("norris.rho");
        for (const auto& e : nv.errors) {
            std::size_t el = ln;
            if (e.find("beta'") != std::string::npos) el = line_of("norris.beta_prime");
            else if (e.find("beta") != std::string::npos) el = line_of("norris.beta");
            else if (e.find("trials") != std::string::npos) el = line_of("norris.trials");
            else if (e.find("eps") != std::string::npos) el = line_of("norris.eps");
            err(el, e);
        }
        for (const auto& w : nv.warnings) warn(w.starts_with("nu") ? line_of("norris.nu") : ln, w);
    }

    if (res.errors.empty()) res.config = std::move(c);
    return res;
}

}  // namespace sheetlab
