#pragma once
//
// Experiment orchestration: runs a RunConfig, writes CSV/JSON artifacts and a
// manifest of SHA-256 content hashes. Artifacts depend only on the config and
// seed; the worker count is deliberately left out of every output.
//
// Needs libcrypto for the hashes.

#include "sheetlab/config.hpp"
#include "sheetlab/density.hpp"
#include "sheetlab/error.hpp"
#include "sheetlab/fieldkit.hpp"
#include "sheetlab/malliavin.hpp"
#include "sheetlab/norris.hpp"
#include "sheetlab/solver.hpp"
#include "sheetlab/version.hpp"

#include "json.hpp"
#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace sheetlab {

using Json = nlohmann::json;  // std::map-backed objects: keys are emitted sorted

inline std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("io", "SHA-256 computation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < len; ++k) {
        out.push_back(hex[md[k] >> 4]);
        out.push_back(hex[md[k] & 15]);
    }
    return out;
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Artifact {
    std::string name;
    std::string content;
};

class ArtifactSet {
public:
    void add(std::string name, std::string content) { items_.push_back({std::move(name), std::move(content)}); }
    void add_json(std::string name, const Json& j) { add(std::move(name), j.dump(2) + "\n"); }
    [[nodiscard]] const std::vector<Artifact>& items() const { return items_; }

    [[nodiscard]] Json manifest() const {
        Json list = Json::array();
        for (const auto& a : items_)
            list.push_back({{"name", a.name}, {"bytes", a.content.size()}, {"sha256", sha256_hex(a.content)}});
        return {{"tool", "sheetlab"}, {"version", kVersion}, {"artifacts", list}};
    }

    void write(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        for (const auto& a : items_) write_file(dir / a.name, a.content);
        write_file(dir / "manifest.json", manifest().dump(2) + "\n");
    }

    static void write_file(const std::filesystem::path& p, const std::string& content) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw Error("io", "cannot write " + p.string());
        out << content;
    }

private:
    std::vector<Artifact> items_;
};

inline Json config_echo(const RunConfig& c) {
    Json settings = Json::object();
    for (const auto& [k, v] : c.settings) settings[k] = v;
    return {{"kind", c.kind}, {"seed", c.seed}, {"settings", settings}, {"version", kVersion}};
}

inline Node target_node(const RunConfig& c, const GridSpec& grid) {
    if (!c.z) return {grid.n_s(), grid.n_t()};
    return grid.snap((*c.z)[0], (*c.z)[1]);
}

inline Json to_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

inline Json to_json(const DecayFit& f) {
    Json j{{"verdict", to_string(f.verdict)}, {"points_used", f.points_used}, {"local_slopes", f.local_slopes}};
    j["slope"] = f.slope ? Json(*f.slope) : Json(nullptr);
    std::vector<bool> bounds(f.local_slope_is_bound.begin(), f.local_slope_is_bound.end());
    j["local_slope_is_bound"] = bounds;
    j["residuals"] = f.residuals;
    return j;
}

namespace detail {

inline void run_simulate(const RunConfig& c, const FieldSet& fs, const GridSpec& grid, ArtifactSet& out, Json& summary) {
    const SheetSample sheet = sample_sheet(grid, fs.d(), c.seed, c.trial);
    const PathLattice path = solve_path(fs, grid, sheet, c.x0);
    std::ostringstream csv;
    write_path_csv(csv, path);
    out.add("path.csv", csv.str());
    const Node z = target_node(c, grid);
    const auto end = path.at(z);
    summary["endpoint"] = std::vector<double>(end.begin(), end.end());
    summary["node"] = {z.i, z.j};
    summary["trial"] = c.trial;
}

inline void run_hormander(const RunConfig& c, const FieldSet& fs, const GridSpec& grid, ArtifactSet& out, Json& summary) {
    const Node z = target_node(c, grid);
    const double t = grid.t_at(z.j);
    const HormanderReport rep = hormander_report(fs, t, c.x0, c.depth, Neighborhood{});
    std::string csv = "level,raw_count,distinct_count,cumulative_rank,c_estimate\n";
    Json levels = Json::array();
    for (const auto& lv : rep.levels) {
        csv += std::to_string(lv.level) + "," + std::to_string(lv.raw_count) + "," + std::to_string(lv.distinct_count) +
               "," + std::to_string(lv.cumulative_rank) + "," + fmt(lv.c_estimate) + "\n";
        levels.push_back({{"level", lv.level},
                          {"raw_count", lv.raw_count},
                          {"distinct_count", lv.distinct_count},
                          {"cumulative_rank", lv.cumulative_rank},
                          {"c_estimate", lv.c_estimate}});
    }
    out.add("hormander.csv", csv);
    summary["levels"] = levels;
    summary["c_N"] = rep.c_N;
    summary["full_rank"] = rep.full_rank();
    summary["spanning_fields"] = rep.spanning_fields;
    summary["t"] = t;
    summary["neighborhood_min"] = rep.neighborhood_min ? Json(*rep.neighborhood_min) : Json(nullptr);
    const HolderCertificate cert = holder_certificate(fs, c.probes, grid.s_max(), grid.t_max());
    Json coeffs = Json::array();
    for (const auto& k : cert.coefficients)
        coeffs.push_back({{"index", k.index},
                          {"t_holder", k.t_holder},
                          {"s_holder", k.s_holder},
                          {"s_lipschitz", k.s_lipschitz},
                          {"sup_value", k.sup_value},
                          {"sup_jacobian", k.sup_jacobian},
                          {"t_holder_ok", k.t_holder_ok},
                          {"s_holder_ok", k.s_holder_ok},
                          {"jacobian_ok", k.jacobian_ok}});
    summary["holder"] = {{"gamma", cert.gamma}, {"beta", cert.beta}, {"passed", cert.passed()}, {"coefficients", coeffs}};
}

inline void run_malliavin(const RunConfig& c, const FieldSet& fs, const GridSpec& grid, ArtifactSet& out, Json& summary) {
    const Node z = target_node(c, grid);
    const MalliavinOptions mo{c.strategy, c.subsample};
    std::vector<MalliavinMatrix> mats(c.trials);
    parallel_for(c.trials, c.workers, [&](std::size_t t) {
        const SheetSample sheet = sample_sheet(grid, fs.d(), c.seed, static_cast<std::uint32_t>(t));
        const PathLattice path = solve_path(fs, grid, sheet, c.x0, z);
        mats[t] = malliavin_matrix(fs, grid, sheet, path, z, mo);
    });
    const std::size_t m = fs.m();
    std::string csv = "trial";
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) csv += ",C_" + std::to_string(a + 1) + "_" + std::to_string(b + 1);
    csv += ",det\n";
    for (std::size_t t = 0; t < mats.size(); ++t) {
        csv += std::to_string(t);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b)
                csv += "," + fmt(mats[t].C(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
        csv += "," + fmt(mats[t].C.determinant()) + "\n";
    }
    out.add("malliavin.csv", csv);
    summary["node"] = {z.i, z.j};
    summary["strategy"] = to_string(c.strategy);
    summary["cells_used"] = mats.empty() ? 0 : mats.front().cells_used;
    summary["cells_total"] = z.i * z.j;
    const DetMomentReport r = det_inverse_moments(mats, c.moment);
    Json hist = Json::array();
    for (const auto& b : r.log10_det_histogram) hist.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}});
    summary["det_moment"] = {{"p", r.p},           {"estimate", r.estimate}, {"std_error", r.std_error},
                             {"ci", {r.ci.lo, r.ci.hi}}, {"used", r.used},         {"floored", r.floored},
                             {"floored_fraction", r.floored_fraction}, {"log10_det_histogram", hist},
                             {"floor", kDetFloor}};
}

inline void run_probe(const RunConfig& c, const FieldSet& fs, const GridSpec& grid, ArtifactSet& out, Json& summary) {
    const Node z = target_node(c, grid);
    ProbeOptions po;
    po.random_directions = c.directions;
    for (const auto& p : c.pinned) po.pinned.push_back(Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size())));
    po.eps = c.eps;
    po.trials = c.trials;
    po.seed = c.seed;
    po.workers = c.workers;
    po.requested_p = c.requested_p;
    po.malliavin = {c.strategy, c.subsample};
    const ProbeReport rep = nondegeneracy_probe(fs, grid, c.x0, z, po);
    const std::size_t m = fs.m();
    std::string csv = "direction";
    for (std::size_t k = 0; k < m; ++k) csv += ",v_" + std::to_string(k + 1);
    csv += ",eps,count,trials,p_hat,ci_lo,ci_hi,upper_bound\n";
    Json dirs = Json::array();
    for (std::size_t d = 0; d < rep.directions.size(); ++d) {
        for (std::size_t e = 0; e < rep.eps.size(); ++e) {
            csv += std::to_string(d);
            for (std::size_t k = 0; k < m; ++k) csv += "," + fmt(rep.directions[d](static_cast<Eigen::Index>(k)));
            const Interval ci = rep.ci(d, e);
            csv += "," + fmt(rep.eps[e]) + "," + std::to_string(rep.counts[d][e]) + "," + std::to_string(rep.trials) + "," +
                   fmt(rep.p_hat(d, e)) + "," + fmt(ci.lo) + "," + fmt(ci.hi) + "," +
                   (rep.counts[d][e] == 0 ? fmt(1.0 / static_cast<double>(rep.trials)) : std::string()) + "\n";
        }
        std::vector<double> v(rep.directions[d].data(), rep.directions[d].data() + m);
        dirs.push_back({{"index", d}, {"v", v}, {"pinned", static_cast<bool>(rep.pinned[d])}, {"fit", to_json(rep.fits[d])}});
    }
    out.add("probe.csv", csv);
    summary["node"] = {z.i, z.j};
    summary["directions"] = dirs;
    summary["worst_direction"] = rep.worst_direction;
    summary["worst_p_hat"] = rep.worst_p_hat;
    summary["eps"] = rep.eps;
    summary["flags"] = rep.flags;
}

inline void run_norris(const RunConfig& c, const FieldSet& fs, const GridSpec& grid, ArtifactSet& out, Json& summary,
                       std::ostream& log) {
    NorrisConfig nc = c.norris;
    nc.seed = c.seed;
    nc.workers = c.workers;
    nc.requested_p = c.requested_p;
    NorrisReport rep;
    if (c.norris_spec == "brownian") {
        SemimartingaleSpec spec = brownian_spec();
        spec.regime = c.norris_regime;
        spec.beta = c.norris_beta;
        spec.beta_prime = c.norris_beta_prime;
        rep = norris_event_probability(spec, nc);
        summary["spec"] = "brownian";
    } else {
        // Y_s(lambda) = <v, V(lambda, t, X_{s,t})> along the row of z.
        const Node z = target_node(c, grid);
        FieldExpr V;
        bool found = false;
        const BracketSet br = bracket_sets(fs, 2);
        for (std::size_t l = 0; l <= fs.d() && !found; ++l)
            if (fs.field(l).label == c.norris_V) V = fs.field(l), found = true;
        for (const auto& lv : br.levels)
            for (const auto& f : lv.fields)
                if (!found && f.label == c.norris_V) V = f, found = true;
        if (!found) throw ConfigError("norris V '" + c.norris_V + "' is not a coefficient or bracket label");
        Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fs.m()));
        if (c.norris_v.empty()) v(0) = 1.0;
        else for (std::size_t k = 0; k < fs.m(); ++k) v(static_cast<Eigen::Index>(k)) = c.norris_v[k];
        if (!(v.norm() > 0.0)) throw DomainError("norris v must be non-zero");
        v /= v.norm();
        rep.config = nc;
        rep.validation = validate_norris(nc, c.norris_regime, c.norris_beta, c.norris_beta_prime);
        if (!rep.validation.ok()) throw ConfigError(rep.validation.errors.front());
        std::vector<double> y2(nc.trials), ups(nc.trials), gap(nc.trials);
        parallel_for(nc.trials, c.workers, [&](std::size_t t) {
            const SheetSample sheet = sample_sheet(grid, fs.d(), c.seed, static_cast<std::uint32_t>(t));
            const PathLattice path = solve_path(fs, grid, sheet, c.x0);
            const SpdeDiagonal sd = spde_diagonal_adapter(fs, grid, sheet, path, v, V, z.j);
            y2[t] = sd.direct.y2_integral();
            ups[t] = sd.direct.upsilon_integral();
            gap[t] = sd.max_discrepancy;
        });
        rep = summarize_norris(nc, rep.validation, y2, ups);
        summary["spec"] = "spde";
        summary["V"] = V.label;
        summary["t_index"] = z.j;
        double worst = 0.0;
        for (double g : gap) worst = std::max(worst, g);
        summary["max_replay_discrepancy"] = worst;
    }
    for (const auto& w : rep.validation.warnings) log << "warning: " << w << "\n";
    std::string csv = "eps,count,trials,p_hat,ci_lo,ci_hi,local_slope,upper_bound\n";
    for (std::size_t k = 0; k < rep.fit.points.size(); ++k) {
        const auto& p = rep.fit.points[k];
        csv += fmt(p.eps) + "," + std::to_string(p.count) + "," + std::to_string(p.trials) + "," + fmt(p.p_hat) + "," +
               fmt(p.ci.lo) + "," + fmt(p.ci.hi) + "," +
               (k < rep.fit.local_slopes.size() ? fmt(rep.fit.local_slopes[k]) : std::string()) + "," +
               (p.upper_bound ? "1" : "0") + "\n";
    }
    out.add("norris.csv", csv);
    summary["fit"] = to_json(rep.fit);
    summary["bounds"] = {{"warnings", rep.validation.warnings},
                         {"nu_min", rep.validation.nu_min ? Json(*rep.validation.nu_min) : Json(nullptr)},
                         {"rho_min", rep.validation.rho_min ? Json(*rep.validation.rho_min) : Json(nullptr)}};
    summary["flags"] = rep.flags;
    summary["y_threshold"] = rep.y_threshold;
    summary["upsilon_threshold"] = rep.upsilon_threshold;
    summary["driver_law"] = "gaussian";
}

inline void run_density(const RunConfig& c, const FieldSet& fs, const GridSpec& grid, ArtifactSet& out, Json& summary) {
    const Node z = target_node(c, grid);
    const EndpointSample s = sample_endpoint(fs, grid, c.x0, z, c.trials, c.seed, c.workers);
    KdeOptions ko;
    ko.resolution = c.resolution;
    ko.workers = c.workers;
    const DensityEstimate est = kde(s, ko);
    std::string csv;
    for (std::size_t k = 0; k < est.m; ++k) csv += "x_" + std::to_string(k + 1) + ",";
    csv += "density\n";
    for (std::size_t f = 0; f < est.values.size(); ++f) {
        for (double x : est.point(f)) csv += fmt(x) + ",";
        csv += fmt(est.values[f]) + "\n";
    }
    out.add("density.csv", csv);
    const SampleMoments mom = sample_moments(s);
    summary["node"] = {z.i, z.j};
    summary["trials"] = s.trials;
    summary["bandwidth"] = est.bandwidth;
    summary["bandwidth_rule"] = est.rule;
    summary["bandwidth_floored"] = est.bandwidth_floored;
    summary["kernel"] = est.kernel;
    summary["mass"] = est.mass();
    summary["mean"] = std::vector<double>(mom.mean.data(), mom.mean.data() + mom.mean.size());
    summary["covariance"] = to_json(mom.covariance);
}

inline void run_converge(const RunConfig& c, const FieldSet& fs, const GridSpec& grid, ArtifactSet& out, Json& summary) {
    const Node z = target_node(c, grid);
    const double s = grid.s_at(z.i), t = grid.t_at(z.j);
    const ConvergenceReport rep = refine_convergence(fs, c.x0, s, t, c.seed, c.levels, c.base, c.trials, c.workers);
    std::string csv = "level,cells";
    for (std::size_t k = 0; k < fs.m(); ++k) csv += ",mean_x_" + std::to_string(k + 1);
    csv += ",rms_difference\n";
    Json levels = Json::array();
    for (std::size_t k = 0; k < rep.levels.size(); ++k) {
        const auto& lv = rep.levels[k];
        csv += std::to_string(k) + "," + std::to_string(lv.cells);
        for (double v : lv.mean_endpoint) csv += "," + fmt(v);
        csv += "," + (lv.rms_difference ? fmt(*lv.rms_difference) : std::string()) + "\n";
        levels.push_back({{"cells", lv.cells},
                          {"mean_endpoint", lv.mean_endpoint},
                          {"rms_difference", lv.rms_difference ? Json(*lv.rms_difference) : Json(nullptr)}});
    }
    out.add("converge.csv", csv);
    summary["levels"] = levels;
    summary["s"] = s;
    summary["t"] = t;
}

}  // namespace detail

// Runs the experiment and writes its artifacts into c.out_dir. Returns the
// process exit status; failures leave error.json behind.
inline int run(const RunConfig& c, std::ostream& log) {
    const std::filesystem::path dir = c.out_dir;
    try {
        const FieldSet fs = build_fields(c);
        const GridSpec grid = make_grid(c.s, c.t, c.n_s, c.n_t);
        ArtifactSet out;
        Json summary = Json::object();
        log << "sheetlab: " << c.kind << " on '" << fs.name() << "' (" << c.n_s << "x" << c.n_t << ", seed " << c.seed
            << ", " << c.workers << " worker" << (c.workers == 1 ? "" : "s") << ")\n";
        if (c.kind == "simulate") detail::run_simulate(c, fs, grid, out, summary);
        else if (c.kind == "hormander") detail::run_hormander(c, fs, grid, out, summary);
        else if (c.kind == "malliavin") detail::run_malliavin(c, fs, grid, out, summary);
        else if (c.kind == "probe") detail::run_probe(c, fs, grid, out, summary);
        else if (c.kind == "norris") detail::run_norris(c, fs, grid, out, summary, log);
        else if (c.kind == "density") detail::run_density(c, fs, grid, out, summary);
        else if (c.kind == "converge") detail::run_converge(c, fs, grid, out, summary);
        else throw ConfigError("unknown experiment kind '" + c.kind + "'");
        summary["config"] = config_echo(c);
        summary["fields"] = fs.name();
        out.add_json(c.kind + ".json", summary);
        out.write(dir);
        log << "sheetlab: wrote " << out.items().size() + 1 << " files to " << dir.string() << "\n";
        return 0;
    } catch (const Error& e) {
        log << "sheetlab: " << e.kind() << " error: " << e.what() << "\n";
        Json j{{"kind", e.kind()}, {"message", e.what()}, {"config", config_echo(c)}};
        if (const auto* d = dynamic_cast<const DivergenceError*>(&e)) j["node"] = {d->i(), d->j()};
        try {
            std::filesystem::create_directories(dir);
            ArtifactSet::write_file(dir / "error.json", j.dump(2) + "\n");
        } catch (...) {
        }
        return e.kind() == "config" || e.kind() == "dimension" ? 2 : 1;
    } catch (const std::exception& e) {
        log << "sheetlab: internal error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace sheetlab
