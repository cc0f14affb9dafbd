#include "pathlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "pathlab/homology.hpp"
#include "pathlab/leafgrowth.hpp"
#include "pathlab/parallel.hpp"
#include "pathlab/report.hpp"

namespace pathlab {

namespace {

using nlohmann::json;

Vector to_vector(const std::vector<double>& v) {
    Vector x(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) x(static_cast<Eigen::Index>(i)) = v[i];
    return x;
}

json int_matrix_json(const IntMatrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
        rows.push_back(row);
    }
    return rows;
}

std::uint64_t seed_of(const ExperimentConfig& cfg, const RunContext& ctx) { return ctx.seed.value_or(cfg.seed); }

json header(const std::string& command, const ExperimentConfig& cfg, const RunContext& ctx) {
    return {{"command", command}, {"seed", seed_of(cfg, ctx)}, {"map", cfg.map}};
}

/// Angle between the line through u and the line through v.
double line_angle(const Vector& u, const Vector& v) {
    const Vector a = u.normalized(), b = v.normalized();
    const double c = std::abs(a.dot(b));
    return std::atan2((a - a.dot(b) * b).norm(), c);
}

/// Number of disk nodes whose torus image lies in some rotation support.
std::size_t nodes_in_support(const LeafDisk& disk, const TorusMap& map) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < disk.node_count(); ++i) {
        const Vector y = wrap(Vector(disk.point(i)));
        for (const auto& rot : map.rotations())
            if (rot.in_support(y)) {
                ++hits;
                break;
            }
    }
    return hits;
}

double least_squares_slope(const std::vector<double>& y, std::size_t first) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
    for (std::size_t i = first; i < y.size(); ++i) {
        const double x = static_cast<double>(i);
        sx += x;
        sy += y[i];
        sxx += x * x;
        sxy += x * y[i];
        cnt += 1;
    }
    if (cnt < 2) return std::numeric_limits<double>::quiet_NaN();
    return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

Matrix leaf_frame(const TorusMap& map, const Vector& x, const BundleSelector& s) {
    if (!map.is_linear() && !s.is_strongest_block()) {
        throw ConfigError("leaf bundle " + s.label() + " is not a strongest block; only those are tracked on perturbed maps");
    }
    return orthonormalize(bundle_frame(map, x, s));
}

} // namespace

const char* to_string(VerdictKind v) {
    switch (v) {
    case VerdictKind::NonAbsolutelyContinuous: return "NON_ABSOLUTELY_CONTINUOUS";
    case VerdictKind::ConsistentWithAC: return "CONSISTENT_WITH_AC";
    case VerdictKind::Inconclusive: return "INCONCLUSIVE";
    }
    return "INCONCLUSIVE";
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) {
    // splitmix64 finalizer over (seed, purpose)
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (purpose + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

Verdict detect(const TorusMap& map, const DetectSpec& spec, const std::vector<int>& splitting,
               const AlignmentOptions& alignment, std::uint64_t seed, int threads) {
    Verdict v;
    v.foliation = spec.bundle;
    v.sigma = spec.sigma;
    v.floor = spec.floor;
    const int n = map.dim();
    auto fail = [&](const std::string& stage, const std::string& why) {
        v.failed_stage = stage;
        v.verdict = VerdictKind::Inconclusive;
        v.preflight[stage]["passed"] = false;
        if (!why.empty()) v.preflight[stage]["error"] = why;
        return v;
    };

    double worst = 0.0;
    for (std::int64_t i = 0; i < spec.volume_samples; ++i) {
        const Vector x = diagnostic_sample(map, derive_seed(seed, 1), static_cast<std::uint64_t>(i));
        worst = std::max(worst, std::abs(std::abs(map.differential(x).determinant()) - 1.0));
    }
    v.preflight["volume"] = {{"samples", spec.volume_samples}, {"max_det_deviation", worst}, {"tolerance", 1e-8},
                             {"passed", worst <= 1e-8}};
    if (!(worst <= 1e-8)) return fail("volume", "");

    const C1DistanceReport c1 = c1_distance_estimate(map, spec.c1_samples, derive_seed(seed, 2));
    v.preflight["c1_distance"] = {{"estimate", c1.estimate},
                                  {"samples", c1.samples},
                                  {"support_hits", c1.support_hits},
                                  {"support_unsampled", c1.support_unsampled}};

    try {
        const DominationReport dom = domination_check(map, splitting, spec.domination_samples, spec.domination_steps,
                                                      derive_seed(seed, 3), alignment, threads);
        v.preflight["domination"] = to_json(dom);
        v.preflight["domination"]["passed"] = dom.holds;
        if (!dom.holds) return fail("domination", "");
    } catch (const NumericalError& e) {
        return fail("domination", e.what());
    }

    const BundleSelector s = BundleSelector::from_one_based(spec.bundle, n);
    try {
        const ClosednessReport cl =
            closedness_condition_check(map, BundleSelector::from_one_based(spec.closedness_bundle, n),
                                       spec.closedness_steps, spec.closedness_samples, derive_seed(seed, 4), alignment,
                                       threads);
        v.preflight["closedness"] = to_json(cl);
        v.preflight["closedness"]["bundle"] = spec.closedness_bundle;
        v.preflight["closedness"]["passed"] = cl.holds;
        if (!cl.holds) return fail("closedness", "");
    } catch (const NumericalError& e) {
        return fail("closedness", e.what());
    }

    try {
        const TopologicalGrowth tg = topological_growth(map.linear_real(), map.eigen(), s);
        v.chi = std::log(std::abs(tg.lambda_w));
        v.chi_provenance = "exact-homology";
        v.preflight["chi"] = {{"lambda_W", tg.lambda_w}, {"eigen_residual", tg.eigen_residual}, {"passed", true}};
    } catch (const NumericalError& e) {
        return fail("chi", e.what());
    }

    try {
        v.lambda = integrated_exponent(map, s, spec.samples, alignment, seed, threads, spec.estimator);
    } catch (const NumericalError& e) {
        return fail("lambda", e.what());
    }
    v.preflight["lambda"] = {{"rejected", v.lambda.rejected}, {"passed", v.lambda.acceptable()}};
    if (!v.lambda.acceptable()) return fail("lambda", "more than 0.1% of samples rejected");

    v.gap = v.lambda.estimate - v.chi;
    v.verdict = v.gap > spec.sigma * v.lambda.std_error + spec.floor ? VerdictKind::NonAbsolutelyContinuous
                                                                    : VerdictKind::ConsistentWithAC;

    if (spec.cross_check_samples > 0) {
        try {
            const ExponentReport u = integrated_exponent(map, s, spec.cross_check_samples, alignment,
                                                         derive_seed(seed, 5), threads, Estimator::Uniform);
            const double joint = std::hypot(u.std_error, v.lambda.std_error);
            v.cross_check = to_json(u);
            v.cross_check["difference"] = u.estimate - v.lambda.estimate;
            v.cross_check["z"] = joint > 0 ? std::abs(u.estimate - v.lambda.estimate) / joint : 0.0;
        } catch (const NumericalError& e) {
            v.cross_check = {{"error", e.what()}};
        }
    }
    return v;
}

json to_json(const Verdict& v) {
    json j;
    j["foliation"] = v.foliation;
    j["chi"] = {{"value", v.chi}, {"provenance", v.chi_provenance}};
    j["lambda"] = v.lambda.samples > 0 ? to_json(v.lambda) : json(nullptr);
    j["gap"] = v.failed_stage.empty() ? json(v.gap) : json(nullptr);
    j["thresholds"] = {{"sigma", v.sigma}, {"floor", v.floor}};
    j["verdict"] = to_string(v.verdict);
    j["failed_stage"] = v.failed_stage.empty() ? json(nullptr) : json(v.failed_stage);
    j["preflight"] = v.preflight;
    if (!v.cross_check.is_null()) j["cross_check"] = v.cross_check;
    return j;
}

CommandResult cmd_analyze(const ExperimentConfig& cfg, const RunContext& ctx) {
    const TorusMap map = torus_map_from_json(cfg.map);
    const EigenData& eig = map.eigen();
    const int n = map.dim();
    json rec = header("analyze", cfg, ctx);
    rec["n"] = n;
    rec["linear"] = int_matrix_json(map.linear().entries());
    rec["determinant"] = map.linear().determinant();
    rec["char_poly"] = char_poly(map.linear());
    rec["eigenvalues"] = eig.values;
    json vecs = json::array();
    for (int i = 0; i < n; ++i) {
        std::vector<double> col(static_cast<std::size_t>(n));
        for (int r = 0; r < n; ++r) col[static_cast<std::size_t>(r)] = eig.vectors(r, i);
        vecs.push_back(col);
    }
    rec["eigenvectors"] = vecs;
    rec["eigen_residuals"] = eig.residuals;

    json induced = json::array();
    for (int k = 1; k < n; ++k) {
        induced.push_back({{"k", k}, {"basis", WedgeIndex(n, k).labels()},
                           {"matrix", int_matrix_json(induced_on_Hk(map.linear(), k))}});
    }
    rec["induced"] = induced;

    json growth = json::array();
    for (int k = 1; k < n; ++k) {
        const WedgeIndex wedges(n, k);
        for (const auto& subset : wedges.subsets()) {
            const BundleSelector s(subset, n);
            json row = {{"bundle", s.one_based()}, {"strongest_block", s.is_strongest_block()}};
            try {
                const TopologicalGrowth tg = topological_growth(map.linear_real(), eig, s);
                row.update(homology_fragment(tg, n));
                row["log_lambda_W"] = std::log(std::abs(tg.lambda_w));
                row["eigen_residual"] = tg.eigen_residual;
            } catch (const NumericalError& e) {
                row["error"] = e.what();
            }
            growth.push_back(row);
        }
    }
    rec["growth"] = growth;
    rec["status"] = "ok";
    return {{rec}, kExitOk};
}

CommandResult cmd_growth(const ExperimentConfig& cfg, const RunContext& ctx) {
    if (cfg.leaves.empty()) throw ConfigError("growth needs at least one entry in 'leaves'");
    const TorusMap map = torus_map_from_json(cfg.map);
    const int n = map.dim();
    CsvWriter steps(ctx.out / "growth_steps.csv",
                    {"leaf", "point", "radius", "step", "nodes", "volume", "log_ratio", "truncated"});
    std::vector<std::string> cur_header = {"leaf", "point", "radius", "step", "volume", "boundary_length",
                                           "stokes_bound", "max_boundary_term"};
    for (const auto& l : WedgeIndex(n, 2).labels()) cur_header.push_back("C(" + l + ")");
    CsvWriter currents(ctx.out / "currents.csv", cur_header);

    json rec = header("growth", cfg, ctx);
    json leaves = json::array();
    bool any_truncated = false;
    for (std::size_t li = 0; li < cfg.leaves.size(); ++li) {
        const LeafSpec& spec = cfg.leaves[li];
        const BundleSelector s = BundleSelector::from_one_based(spec.bundle, n);
        const TopologicalGrowth tg = topological_growth(map.linear_real(), map.eigen(), s);
        const double target = std::log(std::abs(tg.lambda_w));
        double weakest = std::numeric_limits<double>::infinity();
        for (int i : s.indices()) weakest = std::min(weakest, std::abs(map.eigen().values[static_cast<std::size_t>(i)]));
        const auto forms = default_test_forms(n, s.size());

        json runs = json::array();
        double lo = std::numeric_limits<double>::infinity(), hi = -lo, worst = 0.0;
        for (std::size_t pi = 0; pi < spec.points.size(); ++pi) {
            for (double r : spec.radii) {
                const Vector x = to_vector(spec.points[pi]);
                LeafDisk disk = seed_disk(x, leaf_frame(map, x, s), r, spec.delta, spec.budget);
                std::vector<double> bounds, max_terms;
                std::vector<double> component_error;
                for (int t = 0; t < spec.steps && !disk.truncated; ++t) {
                    iterate_refine(disk, map, 1, ctx.threads);
                    const double ratio = std::log(disk.volumes.back() / disk.volumes[disk.volumes.size() - 2]);
                    steps.cell(static_cast<int>(li)).cell(static_cast<int>(pi)).cell(r).cell(disk.step);
                    steps.cell(disk.node_count()).cell(disk.volumes.back()).cell(ratio).cell(disk.truncated ? 1 : 0);
                    steps.end_row();
                    if (s.size() == 2 && !disk.truncated) {
                        const CurrentValue cv = current_eval(disk, forms);
                        const double bound = cv.boundary_length / cv.volume;
                        const double mx = *std::max_element(cv.boundary_terms.begin(), cv.boundary_terms.end());
                        bounds.push_back(bound);
                        max_terms.push_back(mx);
                        double err = 0.0;
                        const double sign = pairing(tg.h_w, cv.components) < 0 ? -1.0 : 1.0;
                        for (std::size_t c = 0; c < cv.components.size(); ++c) {
                            err = std::max(err, std::abs(sign * cv.components[c] - tg.h_w.coefficients[c]));
                        }
                        component_error.push_back(err);
                        currents.cell(static_cast<int>(li)).cell(static_cast<int>(pi)).cell(r).cell(disk.step);
                        currents.cell(cv.volume).cell(cv.boundary_length).cell(bound).cell(mx);
                        for (double c : cv.components) currents.cell(sign * c);
                        currents.end_row();
                    }
                }
                std::vector<double> vols = disk.volumes;
                if (disk.truncated) vols.pop_back();
                any_truncated = any_truncated || disk.truncated;
                json run = {{"point", spec.points[pi]},
                            {"radius", r},
                            {"steps_completed", static_cast<int>(vols.size()) - 1},
                            {"nodes", disk.node_count()},
                            {"nodes_in_support", nodes_in_support(disk, map)},
                            {"truncated", disk.truncated},
                            {"provenance_error", provenance_error(disk, map, 64)}};
                if (vols.size() >= 4 && spec.burn_in < static_cast<int>(vols.size()) - 2) {
                    const ChiEstimate chi = chi_estimate(vols, spec.burn_in);
                    run["chi_hat"] = chi.ratio;
                    run["chi_ratio_residual"] = chi.ratio_residual;
                    run["chi_regression"] = chi.regression;
                    run["chi_regression_residual"] = chi.regression_residual;
                    run["abs_error"] = std::abs(chi.ratio - target);
                    lo = std::min(lo, chi.ratio);
                    hi = std::max(hi, chi.ratio);
                    worst = std::max(worst, std::abs(chi.ratio - target));
                } else {
                    run["chi_hat"] = nullptr;
                    run["warning"] = "too few completed steps for a growth estimate";
                }
                if (disk.truncated) run["warning"] = "node budget exceeded; run truncated";
                if (!bounds.empty()) {
                    std::vector<double> log_bound;
                    for (double b : bounds) log_bound.push_back(std::log(b));
                    std::vector<double> log_terms;
                    for (double m : max_terms) log_terms.push_back(std::log(std::max(m, 1e-300)));
                    const std::size_t first = std::min<std::size_t>(static_cast<std::size_t>(spec.burn_in), bounds.size() - 1);
                    run["currents"] = {{"stokes_bound", bounds},
                                       {"max_boundary_term", max_terms},
                                       {"component_error", component_error},
                                       {"stokes_bound_rate", least_squares_slope(log_bound, first)},
                                       {"max_boundary_term_rate", least_squares_slope(log_terms, first)},
                                       {"expected_rate", -std::log(weakest)}};
                }
                runs.push_back(run);
            }
        }
        json leaf = {{"leaf", li},
                     {"bundle", spec.bundle},
                     {"k", s.size()},
                     {"delta", spec.delta},
                     {"lambda_W", tg.lambda_w},
                     {"log_lambda_W", target},
                     {"h_W", tg.h_w.coefficients},
                     {"runs", runs}};
        leaf["spread"] = hi >= lo ? json(hi - lo) : json(nullptr);
        leaf["max_abs_error"] = hi >= lo ? json(worst) : json(nullptr);
        leaves.push_back(leaf);
    }
    steps.close();
    currents.close();
    rec["leaves"] = leaves;
    rec["status"] = any_truncated ? "truncated" : "ok";
    return {{rec}, any_truncated ? kExitBudget : kExitOk};
}

CommandResult cmd_cycle(const ExperimentConfig& cfg, const RunContext& ctx) {
    const TorusMap map = torus_map_from_json(cfg.map);
    const int n = map.dim();
    std::vector<std::string> head = {"leaf", "point", "radius", "step", "length"};
    for (int i = 1; i <= n; ++i) head.push_back("displacement_" + std::to_string(i));
    for (int i = 1; i <= n; ++i) head.push_back("normalized_" + std::to_string(i));
    head.insert(head.end(), {"angle_to_v", "error_to_v"});
    for (int i = 1; i <= n; ++i) head.push_back("class_" + std::to_string(i));
    head.push_back("pairing_dx1");
    CsvWriter table(ctx.out / "cycle_steps.csv", head);

    json rec = header("cycle", cfg, ctx);
    json leaves = json::array();
    bool any_truncated = false, any = false;
    for (std::size_t li = 0; li < cfg.leaves.size(); ++li) {
        const LeafSpec& spec = cfg.leaves[li];
        if (spec.bundle.size() != 1) continue;
        any = true;
        const BundleSelector s = BundleSelector::from_one_based(spec.bundle, n);
        Vector v = map.eigen().vectors.col(s.front());
        json runs = json::array();
        for (std::size_t pi = 0; pi < spec.points.size(); ++pi) {
            for (double r : spec.radii) {
                const Vector x = to_vector(spec.points[pi]);
                LeafDisk disk = seed_disk(x, leaf_frame(map, x, s), r, spec.delta, spec.budget);
                std::vector<double> angles, errors;
                for (int t = 0; t < spec.steps && !disk.truncated; ++t) {
                    iterate_refine(disk, map, 1, ctx.threads);
                    if (disk.truncated) break;
                    const CycleEstimate c = asymptotic_cycle(disk);
                    const double angle = line_angle(c.displacement, v);
                    const double sign = c.normalized.dot(v) < 0 ? -1.0 : 1.0;
                    const double err = (c.normalized - sign * v).norm();
                    angles.push_back(angle);
                    errors.push_back(err);
                    table.cell(static_cast<int>(li)).cell(static_cast<int>(pi)).cell(r).cell(c.step).cell(c.length);
                    for (int i = 0; i < n; ++i) table.cell(c.displacement(i));
                    for (int i = 0; i < n; ++i) table.cell(c.normalized(i));
                    table.cell(angle).cell(err);
                    for (int i = 0; i < n; ++i) table.cell(static_cast<std::int64_t>(c.integer_class(i)));
                    table.cell(c.normalized(0));
                    table.end_row();
                }
                any_truncated = any_truncated || disk.truncated;
                // Below the resolution of line_angle an increase is rounding noise.
                const double resolution = 16 * std::numeric_limits<double>::epsilon();
                bool decreasing = true;
                for (std::size_t i = 1; i < angles.size(); ++i)
                    decreasing = decreasing && (angles[i] <= angles[i - 1] || angles[i] <= resolution);
                json run = {{"point", spec.points[pi]}, {"radius", r},          {"angle_to_v", angles},
                            {"error_to_v", errors},     {"truncated", disk.truncated}, {"angle_nonincreasing", decreasing},
                            {"nodes_in_support", nodes_in_support(disk, map)}};
                if (!angles.empty()) {
                    const CycleEstimate c = asymptotic_cycle(disk);
                    run["final_class"] = to_json(c.integer_class);
                    run["final_normalized"] = to_json(c.normalized);
                    run["pairing_dx1"] = c.normalized(0);
                }
                runs.push_back(run);
            }
        }
        leaves.push_back({{"leaf", li}, {"bundle", spec.bundle}, {"v", to_json(v)}, {"runs", runs}});
    }
    if (!any) throw ConfigError("cycle needs a leaf with a 1-dimensional bundle");
    table.close();
    rec["leaves"] = leaves;
    rec["status"] = any_truncated ? "truncated" : "ok";
    return {{rec}, any_truncated ? kExitBudget : kExitOk};
}

CommandResult cmd_exponents(const ExperimentConfig& cfg, const RunContext& ctx) {
    const TorusMap map = torus_map_from_json(cfg.map);
    const int n = map.dim();
    const std::uint64_t seed = seed_of(cfg, ctx);
    const MonteCarloSpec& mc = cfg.monte_carlo;
    json rec = header("exponents", cfg, ctx);

    std::vector<std::string> head = {"point"};
    for (int i = 1; i <= n; ++i) head.push_back("x" + std::to_string(i));
    for (int i = 1; i <= n; ++i) head.push_back("lambda" + std::to_string(i));
    head.push_back("sum");
    CsvWriter spectrum_csv(ctx.out / "spectrum.csv", head);
    std::vector<std::vector<double>> spectra(static_cast<std::size_t>(mc.spectrum_points));
    std::vector<Vector> points(static_cast<std::size_t>(mc.spectrum_points));
    parallel_for(mc.spectrum_points, ctx.threads, [&](std::int64_t i) {
        SampleStream rng(derive_seed(seed, 6), static_cast<std::uint64_t>(i));
        points[static_cast<std::size_t>(i)] = rng.uniform_point(n);
        spectra[static_cast<std::size_t>(i)] = qr_spectrum(map, points[static_cast<std::size_t>(i)], mc.spectrum_steps);
    });
    std::vector<double> mean(static_cast<std::size_t>(n), 0.0);
    double max_sum = 0.0;
    for (std::size_t i = 0; i < spectra.size(); ++i) {
        double sum = 0.0;
        spectrum_csv.cell(static_cast<int>(i));
        for (int c = 0; c < n; ++c) spectrum_csv.cell(points[i](c));
        for (int c = 0; c < n; ++c) {
            spectrum_csv.cell(spectra[i][static_cast<std::size_t>(c)]);
            sum += spectra[i][static_cast<std::size_t>(c)];
            mean[static_cast<std::size_t>(c)] += spectra[i][static_cast<std::size_t>(c)] / static_cast<double>(spectra.size());
        }
        spectrum_csv.cell(sum).end_row();
        max_sum = std::max(max_sum, std::abs(sum));
    }
    spectrum_csv.close();
    rec["spectrum"] = {{"points", mc.spectrum_points}, {"steps", mc.spectrum_steps}, {"mean", mean}, {"max_abs_sum", max_sum}};

    const auto integrated = integrated_exponents(map, cfg.splitting, mc.samples, mc.alignment, seed, ctx.threads, mc.estimator);
    json blocks = json::array();
    for (std::size_t b = 0; b + 1 < integrated.size(); ++b) blocks.push_back(to_json(integrated[b]));
    rec["integrated"] = blocks;
    const ExponentReport& total = integrated.back();
    rec["sum"] = {{"estimate", total.estimate},
                  {"stderr", total.std_error},
                  {"within_3_stderr", std::abs(total.estimate) <= 3.0 * total.std_error + 1e-12}};
    const bool usable = total.acceptable();

    CsvWriter table(ctx.out / "exponents.csv", {"kind", "bundle", "estimate", "stderr", "samples", "rejected"});
    auto label = [](const std::vector<int>& b) {
        std::string s;
        for (std::size_t i = 0; i < b.size(); ++i) s += (i ? " " : "") + std::to_string(b[i]);
        return s.empty() ? std::string("sum") : s;
    };
    for (const auto& r : integrated) {
        table.cell(to_string(r.estimator)).cell(label(r.bundle)).cell(r.estimate).cell(r.std_error);
        table.cell(r.samples).cell(r.rejected).end_row();
    }

    if (mc.orbit_length > 0) {
        const Vector x0 = mc.orbit_start.empty() ? SampleStream(derive_seed(seed, 7), 0).uniform_point(n)
                                                 : to_vector(mc.orbit_start);
        json birk = json::array();
        int first = 0;
        for (std::size_t b = 0; b < cfg.splitting.size(); ++b) {
            const BundleSelector s = BundleSelector::interval(first, first + cfg.splitting[b] - 1, n);
            first += cfg.splitting[b];
            const BirkhoffReport br = birkhoff_exponent(map, s, x0, mc.orbit_length, mc.alignment);
            json j = to_json(br);
            const double joint = std::hypot(br.std_error, integrated[b].std_error);
            const double diff = br.estimate - integrated[b].estimate;
            j["difference"] = diff;
            j["z"] = joint > 0 ? std::abs(diff) / joint : 0.0;
            j["agrees"] = std::abs(diff) <= 3.0 * joint + 1e-9;
            birk.push_back(j);
            table.cell("birkhoff").cell(label(br.bundle)).cell(br.estimate).cell(br.std_error);
            table.cell(br.steps).cell(0).end_row();
        }
        rec["birkhoff"] = birk;
    }
    table.close();
    rec["inconclusive"] = !usable;
    rec["status"] = usable ? "ok" : "inconclusive";
    return {{rec}, usable ? kExitOk : kExitNumerical};
}

CommandResult cmd_detect(const ExperimentConfig& cfg, const RunContext& ctx) {
    const TorusMap map = torus_map_from_json(cfg.map);
    const Verdict v = detect(map, cfg.detect, cfg.splitting, cfg.monte_carlo.alignment, seed_of(cfg, ctx), ctx.threads);
    json rec = header("detect", cfg, ctx);
    rec.update(to_json(v));
    rec["status"] = v.failed_stage.empty() ? "ok" : "inconclusive";
    return {{rec}, v.failed_stage.empty() ? kExitOk : kExitNumerical};
}

CommandResult cmd_sweep(const ExperimentConfig& cfg, const RunContext& ctx) {
    if (!cfg.sweep) throw ConfigError("sweep needs a 'sweep' section");
    const SweepSpec& sw = *cfg.sweep;
    CsvWriter table(ctx.out / "sweep.csv", {"theta_max", "rho", "verdict", "gap", "stderr", "z", "domination_margin",
                                            "closedness_margin", "failed_stage", "error"});
    json rec = header("sweep", cfg, ctx);
    json cells = json::array();
    for (double theta : sw.theta_max) {
        for (double rho : sw.rho) {
            json m = cfg.map;
            m["rotations"][static_cast<std::size_t>(sw.rotation)]["theta_max"] = theta;
            m["rotations"][static_cast<std::size_t>(sw.rotation)]["rho"] = rho;
            json cell = {{"theta_max", theta}, {"rho", rho}};
            table.cell(theta).cell(rho);
            try {
                const TorusMap map = torus_map_from_json(m);
                const Verdict v = detect(map, cfg.detect, cfg.splitting, cfg.monte_carlo.alignment, seed_of(cfg, ctx), ctx.threads);
                cell.update(to_json(v));
                const bool ok = v.failed_stage.empty();
                const double z = ok && v.lambda.std_error > 0 ? v.gap / v.lambda.std_error : std::numeric_limits<double>::quiet_NaN();
                auto margin = [&](const char* stage) {
                    return v.preflight.contains(stage) && v.preflight[stage].contains("margin")
                               ? v.preflight[stage]["margin"].get<double>()
                               : std::numeric_limits<double>::quiet_NaN();
                };
                table.cell(to_string(v.verdict)).cell(ok ? v.gap : std::numeric_limits<double>::quiet_NaN());
                table.cell(ok ? v.lambda.std_error : std::numeric_limits<double>::quiet_NaN()).cell(z);
                table.cell(margin("domination")).cell(margin("closedness")).cell(v.failed_stage).cell("");
            } catch (const std::exception& e) {
                cell["verdict"] = to_string(VerdictKind::Inconclusive);
                cell["error"] = e.what();
                const double nan = std::numeric_limits<double>::quiet_NaN();
                table.cell(to_string(VerdictKind::Inconclusive)).cell(nan).cell(nan).cell(nan).cell(nan).cell(nan);
                table.cell("map").cell(e.what());
            }
            table.end_row();
            cells.push_back(cell);
        }
    }
    table.close();
    rec["cells"] = cells;
    rec["status"] = "ok";
    return {{rec}, kExitOk};
}

int run_command(const std::string& command, const std::string& config_path, const RunContext& ctx, std::ostream& log) {
    using Fn = CommandResult (*)(const ExperimentConfig&, const RunContext&);
    static const std::vector<std::pair<std::string, Fn>> table = {
        {"analyze", cmd_analyze}, {"growth", cmd_growth}, {"cycle", cmd_cycle},
        {"exponents", cmd_exponents}, {"detect", cmd_detect}, {"sweep", cmd_sweep}};
    Fn fn = nullptr;
    for (const auto& [name, f] : table) {
        if (name == command) fn = f;
    }
    if (!fn) {
        log << "unknown command '" << command << "'\n";
        return kExitConfig;
    }
    ExperimentConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const ConfigError& e) {
        log << config_path << ": " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        std::filesystem::create_directories(ctx.out);
    } catch (const std::exception& e) {
        log << "cannot create output directory: " << e.what() << "\n";
        return kExitFailure;
    }
    const std::filesystem::path record_path = ctx.out / (command + ".jsonl");
    try {
        const CommandResult res = fn(cfg, ctx);
        write_jsonl(record_path, res.records);
        if (res.exit_code != kExitOk) log << command << ": finished with status " << res.records.back().value("status", "") << "\n";
        return res.exit_code;
    } catch (const ConfigError& e) {
        log << config_path << ": " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        json rec = {{"command", command}, {"status", "error"}, {"error_kind", to_string(e.kind())}, {"message", e.what()}};
        write_jsonl(record_path, {rec});
        log << command << ": " << e.what() << "\n";
        return e.kind() == ErrorKind::BudgetExceeded ? kExitBudget : kExitNumerical;
    } catch (const std::exception& e) {
        log << command << ": " << e.what() << "\n";
        return kExitFailure;
    }
}

} // namespace pathlab
