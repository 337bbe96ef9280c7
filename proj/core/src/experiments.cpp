#include "rwre/experiments.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>

#include <nlohmann/json.hpp>

#include "rwre/criteria.hpp"
#include "rwre/error.hpp"
#include "rwre/exit_stats.hpp"
#include "rwre/hashing.hpp"
#include "rwre/llt.hpp"
#include "rwre/multiscale.hpp"
#include "rwre/parallel.hpp"
#include "rwre/scales.hpp"
#include "rwre/solver.hpp"
#include "rwre/walk.hpp"

namespace rwre {

using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";
constexpr int kCsvColumnsVersion = 1;

const char* kKindNames[] = {
    "env-dump",     "walk",  "solve", "t-gamma",     "criterion", "criterion-search",
    "bands",        "ladder", "census", "tails",     "floor",     "direction",
    "fluctuation",  "intersections", "llt", "exit-kernel",
};

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt(std::int64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%" PRId64, v);
  return buf;
}

// Unknown keys anywhere in a config are rejected before any work starts.
void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
  require(obj.is_object(), Errc::ConfigInvalid, where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    require(ok, Errc::ConfigInvalid, "unknown key \"" + key + "\" in " + where);
  }
}

void check_model_keys(const json& m) {
  check_keys(m, {"d", "kappa", "variant", "seed"}, "model");
  require(m.contains("d") && m.contains("kappa") && m.contains("variant"), Errc::ConfigInvalid,
          "model needs d, kappa and variant");
  const json& v = m.at("variant");
  require(v.is_object() && v.contains("type"), Errc::ConfigInvalid, "variant needs a type");
  std::string type = v.at("type").get<std::string>();
  if (type == "deterministic")
    check_keys(v, {"type", "kernel", "test_mode"}, "variant");
  else if (type == "perturbed_srw")
    check_keys(v, {"type", "epsilon", "axis", "test_mode"}, "variant");
  else if (type == "two_point_mixture")
    check_keys(v, {"type", "kernel_plus", "kernel_minus", "p_mix", "test_mode"}, "variant");
  else if (type == "dirichlet")
    check_keys(v, {"type", "alpha", "test_mode"}, "variant");
  else
    fail(Errc::ConfigInvalid, "unknown model variant \"" + type + "\"");
}

EnvironmentModel model_from(const json& m, std::uint64_t* model_seed) {
  check_model_keys(m);
  json with_seed = m;
  if (!with_seed.contains("seed")) with_seed["seed"] = 0;
  try {
    auto [model, seed] = EnvironmentModel::from_json_string(with_seed.dump());
    if (model_seed) *model_seed = seed;
    return model;
  } catch (const Error& e) {
    fail(Errc::ConfigInvalid, std::string("bad model: ") + e.what());
  }
}

void check_region_keys(const json& r) {
  require(r.is_object() && r.contains("type"), Errc::ConfigInvalid, "region needs a type");
  std::string type = r.at("type").get<std::string>();
  if (type == "slab")
    check_keys(r, {"type", "l", "a", "L", "transversal", "width"}, "region");
  else if (type == "directed_box")
    check_keys(r, {"type", "l", "L", "K"}, "region");
  else if (type == "block")
    check_keys(r, {"type", "anchor", "N", "vhat"}, "region");
  else if (type == "cone")
    check_keys(r, {"type", "L", "delta", "axis", "vhat"}, "region");
  else if (type == "box_spec")
    check_keys(r, {"type", "rotation", "L", "Lp", "Lt"}, "region");
  else
    fail(Errc::ConfigInvalid, "unknown region type \"" + type + "\"");
}

Region region_from(int d, const json& r) {
  check_region_keys(r);
  try {
    return Region::from_json_string(d, r.dump());
  } catch (const Error& e) {
    fail(Errc::ConfigInvalid, std::string("bad region: ") + e.what());
  }
}

Point point_from(const json& arr, int d, const std::string& where) {
  require(arr.is_array() && static_cast<int>(arr.size()) == d, Errc::ConfigInvalid,
          where + " must be an array of length d");
  Point p{};
  for (int i = 0; i < d; ++i) p[i] = arr.at(static_cast<std::size_t>(i)).get<std::int64_t>();
  return p;
}

Vec vec_from(const json& arr, int d, const std::string& where) {
  require(arr.is_array() && static_cast<int>(arr.size()) == d, Errc::ConfigInvalid,
          where + " must be an array of length d");
  Vec v{};
  for (int i = 0; i < d; ++i) v[i] = arr.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

TrapOverlay overlay_from(const json& o, int d) {
  check_keys(o, {"center", "radius", "floor", "inward_bias"}, "trap overlay");
  TrapOverlay ov;
  ov.center = point_from(o.at("center"), d, "overlay center");
  ov.radius = o.at("radius").get<std::int64_t>();
  ov.floor_kappa = o.at("floor").get<double>();
  ov.inward_bias = o.at("inward_bias").get<double>();
  return ov;
}

class ArtifactWriter {
 public:
  explicit ArtifactWriter(const std::filesystem::path& dir) : dir_(dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    require(!ec, Errc::IoFailure, "cannot create output directory " + dir_.string());
  }

  // Atomic write: temp file then rename.
  void write(const std::string& name, const std::string& content) {
    std::filesystem::path tmp = dir_ / ("." + name + ".tmp");
    std::filesystem::path final = dir_ / name;
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      require(out.good(), Errc::IoFailure, "cannot open " + tmp.string());
      out << content;
      require(out.good(), Errc::IoFailure, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, final, ec);
    require(!ec, Errc::IoFailure, "rename failed for " + final.string());
    names_.push_back(name);
  }

  const std::vector<std::string>& names() const { return names_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> names_;
};

struct Ctx {
  const ExperimentConfig* cfg = nullptr;
  json conf;
  EnvironmentModel model;
  bool has_model = false;
};

std::string csv_point_header(int d, const std::string& prefix) {
  std::string s;
  for (int i = 0; i < d; ++i) s += prefix + std::to_string(i + 1) + ",";
  return s;
}

std::string csv_point(const Point& p, int d) {
  std::string s;
  for (int i = 0; i < d; ++i) s += fmt(p[i]) + ",";
  return s;
}

// ---- per-kind runners ------------------------------------------------------

json run_env_dump(Ctx& ctx, ArtifactWriter& w) {
  const json& c = ctx.conf;
  int d = ctx.model.d;
  Point lo = point_from(c.at("window_lo"), d, "window_lo");
  Point hi = point_from(c.at("window_hi"), d, "window_hi");
  Environment env = build_environment(ctx.model, ctx.cfg->seed);
  std::string csv = csv_point_header(d, "x");
  for (int dir = 0; dir < 2 * d; ++dir)
    csv += "p" + std::to_string(dir) + (dir + 1 < 2 * d ? "," : "\n");
  Point p = lo;
  std::int64_t rows = 0;
  while (true) {
    Kernel k = env.site_kernel(p);
    csv += csv_point(p, d);
    for (int dir = 0; dir < 2 * d; ++dir)
      csv += fmt(k.p[dir]) + (dir + 1 < 2 * d ? "," : "\n");
    ++rows;
    require(rows <= 10'000'000, Errc::ConfigInvalid, "window too large for env-dump");
    int i = d - 1;
    while (i >= 0 && ++p[i] > hi[i]) {
      p[i] = lo[i];
      --i;
    }
    if (i < 0) break;
  }
  w.write("env_dump.csv", csv);
  return json{{"rows", rows}, {"kappa", env.kappa()}};
}

json run_walk(Ctx& ctx, ArtifactWriter& w) {
  const json& c = ctx.conf;
  int d = ctx.model.d;
  Region region = region_from(d, c.at("region"));
  Point start = point_from(c.at("start"), d, "start");
  std::int64_t cap = c.at("step_cap").get<std::int64_t>();
  std::int64_t M = c.at("replicas").get<std::int64_t>();
  require(M >= 1, Errc::ConfigInvalid, "replicas must be >= 1");
  Environment env = build_environment(ctx.model, ctx.cfg->seed);

  std::vector<Trajectory> trajs(static_cast<std::size_t>(M));
  parallel_for(M, ctx.cfg->workers, [&](std::int64_t i) {
    trajs[static_cast<std::size_t>(i)] =
        simulate(env, start, region, cap, static_cast<std::uint64_t>(i));
  });

  std::string csv = "replica,steps,stop_reason," + csv_point_header(d, "final");
  csv.back() = '\n';
  for (std::int64_t i = 0; i < M; ++i) {
    const Trajectory& t = trajs[static_cast<std::size_t>(i)];
    Point f = t.final_position();
    csv += fmt(i) + "," + fmt(t.steps()) + "," + stop_reason_name(t.stop_reason) + ",";
    std::string pt = csv_point(f, d);
    pt.back() = '\n';
    csv += pt;
  }
  w.write("walks.csv", csv);
  // First trajectory in both serialization formats.
  auto blob = trajs[0].to_binary();
  w.write("trajectory0.traj", std::string(blob.begin(), blob.end()));
  w.write("trajectory0.json", trajs[0].to_json_string());
  return json{{"replicas", M}, {"step_cap", cap}};
}

json solve_options_from(const json& c) {
  SolveOptions o;
  if (c.contains("options")) {
    const json& j = c.at("options");
    check_keys(j, {"tolerance", "max_iterations", "method", "max_sites"}, "options");
    o.tolerance = j.value("tolerance", o.tolerance);
    o.max_iterations = j.value("max_iterations", o.max_iterations);
    o.max_sites = j.value("max_sites", o.max_sites);
    std::string m = j.value("method", std::string("gauss_seidel"));
    require(m == "gauss_seidel" || m == "jacobi", Errc::ConfigInvalid,
            "method must be gauss_seidel or jacobi");
    o.method = m == "jacobi" ? SolveMethod::Jacobi : SolveMethod::GaussSeidel;
  }
  json dump = {{"tolerance", o.tolerance},
               {"max_iterations", o.max_iterations},
               {"method", o.method == SolveMethod::Jacobi ? "jacobi" : "gauss_seidel"}};
  return json{{"options", dump}};
}

json run_solve(Ctx& ctx, ArtifactWriter& w) {
  const json& c = ctx.conf;
  int d = ctx.model.d;
  Region region = region_from(d, c.at("region"));
  Point start = c.contains("start") ? point_from(c.at("start"), d, "start") : Point{};
  SolveOptions opts;
  {
    json oj = solve_options_from(c);
    const json& j = oj.at("options");
    opts.tolerance = j.at("tolerance").get<double>();
    opts.max_iterations = j.at("max_iterations").get<std::int64_t>();
    opts.method = j.at("method").get<std::string>() == "jacobi" ? SolveMethod::Jacobi
                                                                : SolveMethod::GaussSeidel;
  }
  Environment env = build_environment(ctx.model, ctx.cfg->seed);
  if (c.contains("trap")) env = apply_trap(env, overlay_from(c.at("trap"), d));
  ExitSolution sol = solve_exit(env, region, start, opts);

  std::string csv = csv_point_header(d, "y") + "probability,right_flag\n";
  for (const auto& a : sol.exit_distribution()) {
    csv += csv_point(a.y, d) + fmt(a.prob) + "," + (a.right ? "1" : "0") + "\n";
  }
  w.write("exit_distribution.csv", csv);

  double h0 = sol.h_start();
  json summary = {{"h_start", h0},
                  {"rho", h0 > 0 ? (1.0 - h0) / h0 : -1.0},
                  {"iterations", sol.iterations()},
                  {"residual", sol.max_residual()},
                  {"interior_sites", sol.interior_sites()},
                  {"right_mass", sol.right_mass()}};
  return summary;
}

json run_t_gamma(Ctx& ctx, ArtifactWriter& w) {
  const json& c = ctx.conf;
  int d = ctx.model.d;
  Vec l = c.contains("l") ? vec_from(c.at("l"), d, "l") : axis_vec(0, d);
  double b = c.value("b", 1.0);
  double gamma = c.at("gamma").get<double>();
  std::vector<double> grid = c.at("L_grid").get<std::vector<double>>();
  std::int64_t M = c.at("replicas").get<std::int64_t>();
  TGammaReport rep = t_gamma_estimate(ctx.model, ctx.cfg->seed, l, b, gamma, grid, M,
                                      c.value("safety_cap", std::int64_t{50'000'000}),
                                      ctx.cfg->workers);
  std::string csv = "L,p_hat,ci_lo,ci_hi,normalized,normalized_lo,normalized_hi,censored\n";
  for (const auto& cell : rep.cells) {
    csv += fmt(cell.L) + "," + fmt(cell.report.p_hat) + "," + fmt(cell.report.ci_lo) + "," +
           fmt(cell.report.ci_hi) + "," + fmt(cell.normalized) + "," + fmt(cell.normalized_lo) +
           "," + fmt(cell.normalized_hi) + "," + fmt(cell.report.censored) + "\n";
  }
  w.write("t_gamma.csv", csv);
  return json{{"gamma", gamma},
              {"b", b},
              {"verdict", verdict_name(rep.verdict)},
              {"trend_slope", rep.trend_slope}};
}

CriterionSpec spec_from(const json& c, int d) {
  CriterionSpec spec;
  spec.d = d;
  spec.L = c.at("L").get<double>();
  spec.Ltilde = c.at("Ltilde").get<double>();
  spec.slab_mode = c.value("slab_mode", true);
  if (!spec.slab_mode) {
    for (int i = 0; i < d; ++i) spec.rotation[i] = axis_vec(i, d);
  }
  return spec;
}

json criterion_report_json(const CriterionReport& r) {
  return json{{"L", r.spec.L},
              {"Ltilde", r.spec.Ltilde},
              {"a", r.a},
              {"e_rho_a", r.e_rho_a},
              {"ci_half", r.ci_half},
              {"value", r.value},
              {"value_ci_half", r.value_ci_half},
              {"pass", r.pass},
              {"c1", r.constants.c1},
              {"c2", r.constants.c2},
              {"replicas", r.M},
              {"heavy_tailed", r.heavy_tailed},
              {"median_rho_a", r.median_rho_a}};
}

std::string criterion_csv_row(const CriterionReport& r) {
  return fmt(r.spec.L) + "," + fmt(r.a) + "," + fmt(r.e_rho_a) + "," + fmt(r.ci_half) + "," +
         fmt(r.value) + "," + (r.pass ? "1" : "0") + "\n";
}

json run_criterion(Ctx& ctx, ArtifactWriter& w) {
  const json& c = ctx.conf;
  CriterionConstants constants;
  if (c.contains("constants")) {
    check_keys(c.at("constants"), {"c1", "c2"}, "constants");
    constants.c1 = c.at("constants").value("c1", 1.0);
    constants.c2 = c.at("constants").value("c2", 4.0);
  }
  CriterionSpec spec = spec_from(c, ctx.model.d);
  double a = c.at("a").get<double>();
  std::int64_t M = c.at("replicas").get<std::int64_t>();
  CriterionReport rep =
      effective_criterion_evaluate(ctx.model, ctx.cfg->seed, spec, a, M, constants,
                                   ctx.cfg->workers);
  w.write("criterion.csv", "L,a,e_rho_a,ci_half,value,pass\n" + criterion_csv_row(rep));
  return criterion_report_json(rep);
}

json run_criterion_search(Ctx& ctx, ArtifactWriter& w) {
  const json& c = ctx.conf;
  CriterionConstants constants;
  if (c.contains("constants")) {
    check_keys(c.at("constants"), {"c1", "c2"}, "constants");
    constants.c1 = c.at("constants").value("c1", 1.0);
    constants.c2 = c.at("constants").value("c2", 4.0);
  }
  std::vector<double> L_grid = c.at("L_grid").get<std::vector<double>>();
  std::vector<double> a_grid = c.value("a_grid", std::vector<double>{});
  std::vector<double> epsilons = c.value("epsilons", std::vector<double>{});
  double Ltilde = c.at("Ltilde").get<double>();
  std::int64_t M = c.at("replicas").get<std::int64_t>();
  std::vector<CriterionReport> all;
  CriterionReport best = effective_criterion_search(ctx.model, ctx.cfg->seed, L_grid, a_grid,
                                                    epsilons, Ltilde, M, constants,
                                                    ctx.cfg->workers, &all);
  std::string csv = "L,a,e_rho_a,ci_half,value,pass\n";
  for (const auto& r : all) csv += criterion_csv_row(r);
  w.write("criterion_search.csv", csv);
  json j = criterion_report_json(best);
  j["cells"] = all.size();
  return j;
}

json run_bands(Ctx& ctx, ArtifactWriter& w) {
  const json& c = ctx.conf;
  const json& pj = c.at("params");
  check_keys(pj, {"gamma", "n", "beta", "k", "epsilon"}, "params");
  BandParams params;
  params.gamma = pj.at("gamma").get<double>();
  params.n = pj.at("n").get<int>();
  params.beta = pj.at("beta").get<std::vector<double>>();
  params.k = pj.at("k").get<std::vector<double>>();
  params.epsilon = pj.at("epsilon").get<double>();
  CriterionSpec spec = spec_from(c.at("spec"), ctx.model.d);
  check_keys(c.at("spec"), {"L", "Ltilde", "slab_mode"}, "spec");
  params.L = spec.L;
  std::int64_t M = c.at("replicas").get<std::int64_t>();
  require(M >= 1, Errc::ConfigInvalid, "replicas must be >= 1");

  std::optional<TrapMixture> trap;
  if (c.contains("trap_mixture")) {
    const json& t = c.at("trap_mixture");
    check_keys(t, {"overlay", "weight"}, "trap_mixture");
    trap = TrapMixture{overlay_from(t.at("overlay"), ctx.model.d), t.at("weight").get<double>()};
  }

  Region region = spec.make_region();
  std::vector<std::pair<double, double>> samples(static_cast<std::size_t>(M));
  parallel_for(M, ctx.cfg->workers, [&](std::int64_t i) {
    std::uint64_t env_seed =
        replica_seed(ctx.cfg->seed, 0x62616E64 /* band */, static_cast<std::uint64_t>(i));
    Environment env = build_environment(ctx.model, env_seed);
    if (trap && u01(hash_combine(env_seed, tag::kMixture), 0) < trap->weight)
      env = apply_trap(env, trap->overlay);
    SolveOptions h_only;
    h_only.exit_distribution = false;
    ExitSolution sol = solve_exit(env, region, Point{}, h_only);
    double h = sol.h_start();
    samples[static_cast<std::size_t>(i)] = {h, h > 0 ? (1.0 - h) / h : HUGE_VAL};
  });

  BandDecomposition bands = rho_band_decomposition(samples, params);
  std::string csv = "band,threshold,mass,count\n";
  for (std::size_t j = 0; j < bands.masses.size(); ++j) {
    double thr = j == 0 ? 1.0 : bands.thresholds[j - 1];
    csv += fmt(static_cast<std::int64_t>(j)) + "," + fmt(thr) + "," + fmt(bands.masses[j]) +
           "," + fmt(bands.counts[j]) + "\n";
  }
  w.write("bands.csv", csv);
  return json{{"a", bands.a},
              {"e_rho_a", bands.e_rho_a},
              {"delta1_hat", bands.delta1_hat},
              {"masses", bands.masses},
              {"counts", bands.counts}};
}

LadderParams ladder_params_from(const json& pj) {
  bool paper = pj.value("mode", std::string("paper")) == "paper";
  if (paper) {
    check_keys(pj, {"mode", "d", "alpha", "beta", "delta", "psi", "chi"}, "ladder params");
    return LadderParams::paper(pj.value("d", 2), pj.at("alpha").get<double>(),
                               pj.at("beta").get<double>(), pj.at("delta").get<double>(),
                               pj.at("psi").get<double>(), pj.at("chi").get<double>());
  }
  check_keys(pj, {"mode", "d", "alpha", "beta", "delta", "L1", "m"}, "ladder params");
  return LadderParams::explicit_mode(pj.value("d", 2), pj.at("L1").get<std::int64_t>(),
                                     pj.at("m").get<std::int64_t>(),
                                     pj.at("alpha").get<double>(), pj.at("beta").get<double>(),
                                     pj.at("delta").get<double>());
}

json run_ladder(Ctx& ctx, ArtifactWriter& w) {
  const json& c = ctx.conf;
  std::int64_t L = c.at("L").get<std::int64_t>();
  LadderParams params = ladder_params_from(c.at("params"));
  ScaleLadder ladder = build_ladder(L, params);
  std::string csv = "k,L_k\n";
  for (std::size_t k = 0; k < ladder.levels.size(); ++k)
    csv += fmt(static_cast<std::int64_t>(k + 1)) + "," + fmt(ladder.levels[k]) + "\n";
  w.write("ladder.csv", csv);
  return json{{"L", L},
              {"levels", ladder.levels},
              {"iota", ladder.iota},
              {"multiplier", ladder.multiplier}};
}

json run_census(Ctx& ctx, ArtifactWriter& w) {
  const json& c = ctx.conf;
  int d = ctx.model.d;
  std::int64_t L = c.at("L").get<std::int64_t>();
  LadderParams params = ladder_params_from(c.at("params"));
  ScaleLadder ladder = build_ladder(L, params);
  double gamma = c.at("gamma").get<double>();
  double cone_delta = c.value("cone_delta", params.delta);
  Vec vhat = c.contains("vhat") ? vec_from(c.at("vhat"), d, "vhat")
                                : normalized(ctx.model.mean_drift(), d);
  std::int64_t ref_M = c.value("reference_M", std::int64_t{64});
  TestSitePolicy policy;
  policy.per_axis = c.value("test_sites_per_axis", 3);

  Environment env = build_environment(ctx.model, ctx.cfg->seed);
  if (c.contains("trap")) env = apply_trap(env, overlay_from(c.at("trap"), d));

  std::vector<AnnealedReference> refs;
  for (std::int64_t Lk : ladder.levels)
    refs.push_back(annealed_reference(ctx.model, ctx.cfg->seed + 1, Lk, params.theta, vhat,
                                      ref_M, policy, ctx.cfg->workers));
  CensusReport census = bad_block_census(env, L, ladder, params, gamma, cone_delta, refs, vhat,
                                         policy, ctx.cfg->workers);

  std::string csv = "level," + csv_point_header(d, "anchor") +
                    "metric1,metric2,metric3,thr1,thr2,thr3,good\n";
  for (const auto& r : census.reports) {
    csv += fmt(r.N) + "," + csv_point(r.anchor, d) + fmt(r.metric1) + "," + fmt(r.metric2) +
           "," + fmt(r.metric3) + "," + fmt(r.thresholds.wrong_exit) + "," +
           fmt(r.thresholds.expectation_gap) + "," + fmt(r.thresholds.cube_gap) + "," +
           (r.good ? "1" : "0") + "\n";
  }
  w.write("census.csv", csv);
  return json{{"levels", census.levels},
              {"bad_counts", census.bad_counts},
              {"block_totals", census.block_totals},
              {"count_threshold", census.count_threshold},
              {"theta_holds", census.theta_holds}};
}

ExitTailQuery tail_query_from(const json& c, int d, const EnvironmentModel& model) {
  const json& q = c.at("query");
  check_keys(q,
             {"geometry", "c", "beta", "L", "l", "axis", "K", "cone_delta", "replicas", "width",
              "vhat"},
             "query");
  ExitTailQuery query;
  std::string g = q.value("geometry", std::string("slab"));
  require(g == "slab" || g == "box" || g == "cone", Errc::ConfigInvalid,
          "geometry must be slab, box or cone");
  query.geometry = g == "slab"   ? TailGeometry::Slab
                   : g == "box" ? TailGeometry::Box
                                : TailGeometry::Cone;
  query.c = q.at("c").get<double>();
  query.beta = q.at("beta").get<double>();
  query.L = q.value("L", 16.0);
  query.l = q.contains("l") ? vec_from(q.at("l"), d, "l") : axis_vec(0, d);
  query.axis = q.value("axis", 0);
  query.K = q.value("K", 1.0);
  query.cone_delta = q.value("cone_delta", 0.2);
  query.M = q.at("replicas").get<std::int64_t>();
  query.slab_width = q.value("width", std::int64_t{0});
  query.vhat = q.contains("vhat") ? vec_from(q.at("vhat"), d, "vhat")
                                  : normalized(model.mean_drift(), d);
  return query;
}

json run_tails(Ctx& ctx, ArtifactWriter& w) {
  const json& c = ctx.conf;
  int d = ctx.model.d;
  ExitTailQuery query = tail_query_from(c, d, ctx.model);
  if (c.contains("trap_mixture")) {
    const json& t = c.at("trap_mixture");
    check_keys(t, {"overlay", "weight"}, "trap_mixture");
    query.trap =
        TrapMixture{overlay_from(t.at("overlay"), d), t.at("weight").get<double>()};
  }
  json out;
  std::vector<TailReport> reports;
  if (c.contains("L_grid")) {
    TailGridReport grid = atypical_exit_tail_grid(
        ctx.model, ctx.cfg->seed, query, c.at("L_grid").get<std::vector<double>>(),
        ctx.cfg->workers);
    reports = std::move(grid.reports);
    out["L_grid"] = grid.L_grid;
    if (grid.alpha_hat) out["alpha_hat"] = *grid.alpha_hat;
  } else {
    reports.push_back(atypical_exit_tail(ctx.model, ctx.cfg->seed, query, ctx.cfg->workers));
  }
  std::string csv = "L,replica,right_exit_prob,below_threshold,trapped\n";
  json fractions = json::array();
  for (std::size_t g = 0; g < reports.size(); ++g) {
    const TailReport& r = reports[g];
    double L = c.contains("L_grid") ? c.at("L_grid").at(g).get<double>() : query.L;
    for (std::int64_t i = 0; i < r.M; ++i) {
      csv += fmt(L) + "," + fmt(i) + "," + fmt(r.probs[static_cast<std::size_t>(i)]) + "," +
             std::string(r.below[static_cast<std::size_t>(i)] ? "1" : "0") + "," +
             std::string(r.trapped[static_cast<std::size_t>(i)] ? "1" : "0") + "\n";
    }
    fractions.push_back(json{{"L", L},
                             {"threshold", r.threshold},
                             {"fraction", r.fraction},
                             {"underflow", r.underflow}});
  }
  w.write("tails.csv", csv);
  out["cells"] = fractions;
  return out;
}

json run_floor(Ctx& ctx, ArtifactWriter& w) {
  const json& c = ctx.conf;
  int d = ctx.model.d;
  std::int64_t L = c.at("L").get<std::int64_t>();
  std::int64_t M = c.at("replicas").get<std::int64_t>();
  double Cp = c.value("C_prime", 1.0);
  Vec vhat = c.contains("vhat") ? vec_from(c.at("vhat"), d, "vhat")
                                : normalized(ctx.model.mean_drift(), d);
  Point x = c.contains("x") ? point_from(c.at("x"), d, "x") : Point{};
  ExitFloorReport rep =
      exit_point_floor(ctx.model, ctx.cfg->seed, L, M, Cp, vhat, x, ctx.cfg->workers);
  std::string csv = csv_point_header(d, "y") + "prob,scaled,admissible\n";
  for (const auto& row : rep.table)
    csv += csv_point(row.y, d) + fmt(row.prob) + "," + fmt(row.scaled) + "," +
           (row.admissible ? "1" : "0") + "\n";
  w.write("floor.csv", csv);
  return json{{"L", L}, {"floor", rep.floor}, {"right_mass", rep.right_mass}};
}

json run_direction(Ctx& ctx, ArtifactWriter& w) {
  const json& c = ctx.conf;
  std::int64_t L = c.value("L", std::int64_t{16});
  std::int64_t M = c.at("replicas").get<std::int64_t>();
  std::int64_t horizon = c.value("horizon", std::int64_t{20000});
  DirectionEstimate est =
      estimate_direction(ctx.model, ctx.cfg->seed, L, M, horizon, ctx.cfg->workers);
  json j = {{"drift_detected", est.drift_detected},
            {"usable", est.usable},
            {"a_event_count", est.a_event_count},
            {"mean_norm", est.mean_norm},
            {"se_norm", est.se_norm}};
  if (est.drift_detected) {
    std::vector<double> v(est.v_emp.begin(), est.v_emp.begin() + ctx.model.d);
    std::vector<double> vl(est.v_L_emp.begin(), est.v_L_emp.begin() + ctx.model.d);
    j["v_emp"] = v;
    j["v_L_emp"] = vl;
    DirectionGapReport gap =
        direction_gap(ctx.model, ctx.cfg->seed, L, M, horizon, ctx.cfg->workers);
    j["gap"] = gap.gap;
    j["gap_boot_lo"] = gap.boot_lo;
    j["gap_boot_hi"] = gap.boot_hi;
  }
  w.write("direction.csv",
          "drift_detected,mean_norm,se_norm\n" + std::string(est.drift_detected ? "1" : "0") +
              "," + fmt(est.mean_norm) + "," + fmt(est.se_norm) + "\n");
  return j;
}

json run_fluctuation(Ctx& ctx, ArtifactWriter& w) {
  const json& c = ctx.conf;
  int d = ctx.model.d;
  std::int64_t L = c.at("L").get<std::int64_t>();
  std::int64_t M = c.at("replicas").get<std::int64_t>();
  Point x = c.contains("x") ? point_from(c.at("x"), d, "x") : Point{};
  Vec vhat = c.contains("vhat") ? vec_from(c.at("vhat"), d, "vhat")
                                : normalized(ctx.model.mean_drift(), d);
  int index = c.value("transversal_index", 3);
  FluctuationReport rep = transversal_fluctuation_tail(ctx.model, ctx.cfg->seed, L, M, x, vhat,
                                                       index, ctx.cfg->workers);
  w.write("fluctuation.csv", "p_union,p_transversal,p_backtrack\n" + fmt(rep.p_union) + "," +
                                 fmt(rep.p_transversal) + "," + fmt(rep.p_backtrack) + "\n");
  return json{{"p_union", rep.p_union},
              {"p_transversal", rep.p_transversal},
              {"p_backtrack", rep.p_backtrack},
              {"transversal_index", rep.transversal_index}};
}

json run_intersections(Ctx& ctx, ArtifactWriter& w) {
  const json& c = ctx.conf;
  int d = ctx.model.d;
  std::int64_t L = c.at("L").get<std::int64_t>();
  std::int64_t M = c.at("replicas").get<std::int64_t>();
  Point x1 = point_from(c.at("x1"), d, "x1");
  Point x2 = point_from(c.at("x2"), d, "x2");
  Vec vhat = c.contains("vhat") ? vec_from(c.at("vhat"), d, "vhat")
                                : normalized(ctx.model.mean_drift(), d);
  IntersectionReport rep =
      intersection_census(ctx.model, ctx.cfg->seed, L, M, x1, x2, vhat, ctx.cfg->workers);
  std::map<std::int64_t, std::int64_t> hist;
  for (std::int64_t v : rep.counts) ++hist[v];
  std::string csv = "count,frequency\n";
  for (const auto& [v, n] : hist) csv += fmt(v) + "," + fmt(n) + "\n";
  w.write("intersections.csv", csv);
  return json{{"mean", rep.mean},
              {"tail", rep.tail},
              {"dimension_warning", rep.dimension_warning}};
}

json run_llt(Ctx& ctx, ArtifactWriter& w) {
  const json& c = ctx.conf;
  const json& lj = c.at("law");
  check_keys(lj, {"type", "d", "atoms"}, "law");
  int d = lj.value("d", 1);
  LatticeLaw law;
  if (lj.at("type").get<std::string>() == "srw") {
    law = LatticeLaw::srw(d);
  } else {
    std::vector<std::pair<Point, double>> atoms;
    for (const auto& a : lj.at("atoms")) {
      check_keys(a, {"x", "p"}, "law atom");
      atoms.emplace_back(point_from(a.at("x"), d, "law atom"), a.at("p").get<double>());
    }
    law = LatticeLaw::of(d, std::move(atoms));
  }
  std::vector<std::int64_t> grid = c.at("n_grid").get<std::vector<std::int64_t>>();
  LltReport rep = llt_discrepancy_report(law, grid);
  std::string csv = "n,statistic,value\n";
  for (const auto& cell : rep.cells) {
    csv += fmt(cell.n) + ",sup_p," + fmt(cell.sup_p) + "\n";
    csv += fmt(cell.n) + ",sup_first," + fmt(cell.sup_first) + "\n";
    csv += fmt(cell.n) + ",sup_second," + fmt(cell.sup_second) + "\n";
    if (d >= 2) csv += fmt(cell.n) + ",sup_mixed," + fmt(cell.sup_mixed) + "\n";
  }
  w.write("llt.csv", csv);
  return json{{"parity_restricted", rep.parity_restricted},
              {"exp_sup", rep.exp_sup},
              {"exp_first", rep.exp_first},
              {"exp_second", rep.exp_second},
              {"exp_mixed", rep.exp_mixed}};
}

json run_exit_kernel(Ctx& ctx, ArtifactWriter& w) {
  const json& c = ctx.conf;
  int d = ctx.model.d;
  std::vector<std::int64_t> grid = c.at("L_grid").get<std::vector<std::int64_t>>();
  std::int64_t M = c.at("replicas").get<std::int64_t>();
  Vec vhat = c.contains("vhat") ? vec_from(c.at("vhat"), d, "vhat")
                                : normalized(ctx.model.mean_drift(), d);
  ExitKernelReport rep =
      exit_kernel_smoothness(ctx.model, ctx.cfg->seed, grid, M, vhat, ctx.cfg->workers);
  std::string csv = "L,statistic,value\n";
  for (const auto& cell : rep.cells) {
    csv += fmt(cell.L) + ",sup_nu," + fmt(cell.sup_nu) + "\n";
    csv += fmt(cell.L) + ",sup_diff," + fmt(cell.sup_diff) + "\n";
    csv += fmt(cell.L) + ",scaled_sup," + fmt(cell.scaled_sup) + "\n";
    csv += fmt(cell.L) + ",scaled_diff," + fmt(cell.scaled_diff) + "\n";
    csv += fmt(cell.L) + ",right_mass," + fmt(cell.right_mass) + "\n";
  }
  w.write("exit_kernel.csv", csv);
  return json{{"cells", rep.cells.size()}, {"replicas", rep.M}};
}

// Keys allowed at the top level, per kind.
void check_top_keys(ExperimentKind kind, const json& c) {
  switch (kind) {
    case ExperimentKind::EnvDump:
      check_keys(c, {"kind", "model", "seed", "workers", "out", "window_lo", "window_hi"},
                 "config");
      break;
    case ExperimentKind::Walk:
      check_keys(c, {"kind", "model", "seed", "workers", "out", "region", "start", "step_cap",
                     "replicas"},
                 "config");
      break;
    case ExperimentKind::Solve:
      check_keys(c, {"kind", "model", "seed", "workers", "out", "region", "start", "options",
                     "trap"},
                 "config");
      break;
    case ExperimentKind::TGamma:
      check_keys(c, {"kind", "model", "seed", "workers", "out", "l", "b", "gamma", "L_grid",
                     "replicas", "safety_cap"},
                 "config");
      break;
    case ExperimentKind::Criterion:
      check_keys(c, {"kind", "model", "seed", "workers", "out", "L", "Ltilde", "slab_mode", "a",
                     "replicas", "constants"},
                 "config");
      break;
    case ExperimentKind::CriterionSearch:
      check_keys(c, {"kind", "model", "seed", "workers", "out", "L_grid", "a_grid", "epsilons",
                     "Ltilde", "replicas", "constants"},
                 "config");
      break;
    case ExperimentKind::Bands:
      check_keys(c, {"kind", "model", "seed", "workers", "out", "spec", "params", "replicas",
                     "trap_mixture"},
                 "config");
      break;
    case ExperimentKind::Ladder:
      check_keys(c, {"kind", "seed", "workers", "out", "L", "params"}, "config");
      break;
    case ExperimentKind::Census:
      check_keys(c, {"kind", "model", "seed", "workers", "out", "L", "params", "gamma",
                     "cone_delta", "vhat", "reference_M", "test_sites_per_axis", "trap"},
                 "config");
      break;
    case ExperimentKind::Tails:
      check_keys(c, {"kind", "model", "seed", "workers", "out", "query", "L_grid",
                     "trap_mixture"},
                 "config");
      break;
    case ExperimentKind::Floor:
      check_keys(c, {"kind", "model", "seed", "workers", "out", "L", "replicas", "C_prime",
                     "vhat", "x"},
                 "config");
      break;
    case ExperimentKind::Direction:
      check_keys(c, {"kind", "model", "seed", "workers", "out", "L", "replicas", "horizon"},
                 "config");
      break;
    case ExperimentKind::Fluctuation:
      check_keys(c, {"kind", "model", "seed", "workers", "out", "L", "replicas", "x", "vhat",
                     "transversal_index"},
                 "config");
      break;
    case ExperimentKind::Intersections:
      check_keys(c, {"kind", "model", "seed", "workers", "out", "L", "replicas", "x1", "x2",
                     "vhat"},
                 "config");
      break;
    case ExperimentKind::Llt:
      check_keys(c, {"kind", "seed", "workers", "out", "law", "n_grid"}, "config");
      break;
    case ExperimentKind::ExitKernel:
      check_keys(c, {"kind", "model", "seed", "workers", "out", "L_grid", "replicas", "vhat"},
                 "config");
      break;
  }
}

}  // namespace

const char* experiment_kind_name(ExperimentKind k) {
  return kKindNames[static_cast<int>(k)];
}

ExperimentKind experiment_kind_from(const std::string& name) {
  for (int i = 0; i < static_cast<int>(std::size(kKindNames)); ++i)
    if (name == kKindNames[i]) return static_cast<ExperimentKind>(i);
  fail(Errc::ConfigInvalid, "unknown experiment kind \"" + name + "\"");
}

ExperimentConfig parse_experiment_config(ExperimentKind kind, const std::string& json_text) {
  json c = json::parse(json_text, nullptr, false);
  require(!c.is_discarded(), Errc::ConfigInvalid, "config is not valid JSON");
  check_top_keys(kind, c);
  if (c.contains("kind"))
    require(experiment_kind_from(c.at("kind").get<std::string>()) == kind, Errc::ConfigInvalid,
            "config kind does not match the subcommand");

  ExperimentConfig cfg;
  cfg.kind = kind;
  cfg.raw_json = c.dump();

  std::uint64_t model_seed = 0;
  bool needs_model = kind != ExperimentKind::Ladder && kind != ExperimentKind::Llt;
  if (needs_model) {
    require(c.contains("model"), Errc::ConfigInvalid, "config needs a model");
    (void)model_from(c.at("model"), &model_seed);
  }
  std::uint64_t default_seed = model_seed != 0 ? model_seed : std::uint64_t{1};
  cfg.seed = c.contains("seed") ? c.at("seed").get<std::uint64_t>() : default_seed;
  cfg.workers = c.value("workers", 1);
  require(cfg.workers >= 1 && cfg.workers <= 256, Errc::ConfigInvalid,
          "workers must lie in [1, 256]");
  cfg.out_dir = c.value("out", std::string("."));

  // Kind-specific validation happens in the runner; trigger the cheap parts
  // here so clearly broken configs fail before any work.
  return cfg;
}

RunResult run_experiment(const ExperimentConfig& config) {
  auto t0 = std::chrono::steady_clock::now();
  json c = json::parse(config.raw_json);

  Ctx ctx;
  ctx.cfg = &config;
  ctx.conf = c;
  if (c.contains("model")) {
    ctx.model = model_from(c.at("model"), nullptr);
    ctx.has_model = true;
  }

  ArtifactWriter writer(config.out_dir);
  json summary;
  switch (config.kind) {
    case ExperimentKind::EnvDump: summary = run_env_dump(ctx, writer); break;
    case ExperimentKind::Walk: summary = run_walk(ctx, writer); break;
    case ExperimentKind::Solve: summary = run_solve(ctx, writer); break;
    case ExperimentKind::TGamma: summary = run_t_gamma(ctx, writer); break;
    case ExperimentKind::Criterion: summary = run_criterion(ctx, writer); break;
    case ExperimentKind::CriterionSearch: summary = run_criterion_search(ctx, writer); break;
    case ExperimentKind::Bands: summary = run_bands(ctx, writer); break;
    case ExperimentKind::Ladder: summary = run_ladder(ctx, writer); break;
    case ExperimentKind::Census: summary = run_census(ctx, writer); break;
    case ExperimentKind::Tails: summary = run_tails(ctx, writer); break;
    case ExperimentKind::Floor: summary = run_floor(ctx, writer); break;
    case ExperimentKind::Direction: summary = run_direction(ctx, writer); break;
    case ExperimentKind::Fluctuation: summary = run_fluctuation(ctx, writer); break;
    case ExperimentKind::Intersections: summary = run_intersections(ctx, writer); break;
    case ExperimentKind::Llt: summary = run_llt(ctx, writer); break;
    case ExperimentKind::ExitKernel: summary = run_exit_kernel(ctx, writer); break;
  }

  summary["kind"] = experiment_kind_name(config.kind);
  summary["seed"] = config.seed;
  std::string summary_name = std::string(experiment_kind_name(config.kind)) + "_summary.json";
  writer.write(summary_name, summary.dump(2) + "\n");

  auto t1 = std::chrono::steady_clock::now();
  char hash_hex[20];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016" PRIx64, fnv1a(config.raw_json));
  json manifest = {
      {"config_hash", hash_hex},
      {"tool_version", kToolVersion},
      {"csv_columns_version", kCsvColumnsVersion},
      {"kind", experiment_kind_name(config.kind)},
      {"wall_time_s", std::chrono::duration<double>(t1 - t0).count()},
      {"outputs", writer.names()},
  };
  writer.write("manifest.json", manifest.dump(2) + "\n");

  RunResult result;
  result.artifacts = writer.names();
  result.summary_json = summary.dump();
  return result;
}

}  // namespace rwre
