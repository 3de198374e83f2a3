#include "nrmpp/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "nrmpp/nrm.hpp"
#include "nrmpp/summaries.hpp"

#ifndef NRMPP_VERSION
#define NRMPP_VERSION "0.1.0"
#endif
#ifndef NRMPP_GIT_REVISION
#define NRMPP_GIT_REVISION "unknown"
#endif

namespace fs = std::filesystem;

namespace nrmpp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument(what + ": not a number: '" + s + "'");
  }
  if (trim(s.substr(pos)) != "") throw std::invalid_argument(what + ": not a number: '" + s + "'");
  return v;
}

}  // namespace

// --- configuration -------------------------------------------------------------

Config Config::defaults() {
  Config c;
  c.values_ = {
      {"seed", "1"},
      {"process.family", "poisson"},
      {"process.region.lower", "-0.5"},
      {"process.region.upper", "0.5"},
      {"process.poisson.rate", "1"},
      {"process.strauss.beta", "2"},
      {"process.strauss.gamma", "0.5"},
      {"process.strauss.radius", "0.1"},
      {"process.strauss.bd_sweeps", "0"},
      {"process.strauss.mc_samples", "2000"},
      {"process.strauss.mc_seed", "7"},
      {"process.dpp.rho", "3"},
      {"process.dpp.alpha", "0.02"},
      {"process.dpp.basis", "fourier"},
      {"process.dpp.cutoff_tol", "1e-6"},
      {"process.dpp.nystrom_m", "200"},
      {"process.sncp.gamma", "1"},
      {"process.sncp.kernel_sd", "1"},
      {"process.sncp.base", "gaussian"},
      {"process.sncp.lambda", "1"},
      {"process.sncp.base_mean", "0"},
      {"process.sncp.base_sd", "5"},
      {"jumps.shape", "2"},
      {"jumps.rate", "2"},
      {"variance.shape", "2"},
      {"variance.scale", "2"},
      {"chain.n_iter", "2000"},
      {"chain.burn_in", "500"},
      {"chain.thin", "1"},
      {"chain.algorithm", "conditional"},
      {"chain.neal_l", "3"},
      {"chain.atom_step", "0.25"},
      {"chain.log_u_step", "0.5"},
      {"chain.atom_mh_steps", "1"},
      {"chain.gibbs_bd_sweeps", "5"},
      {"chain.store_measures", "true"},
      {"chain.init_clusters", "10"},
      {"chain.chains", "1"},
      {"data.path", ""},
      {"data.generator", "t3mix"},
      {"data.seed", "1"},
      {"data.n", "200"},
      {"output.dir", "out"},
      {"output.grid", "-10,10,201"},
      {"prior.n", "5"},
      {"prior.alpha", "1"},
      {"prior.poisson.rate", "1"},
      {"prior.dpp.rho", "5"},
      {"prior.dpp.alpha", "0.3"},
      {"prior.dpp.nystrom_m", "200"},
      {"prior.region.lower", "-0.5"},
      {"prior.region.upper", "0.5"},
      {"prior.x_min", "0.02"},
      {"prior.x_max", "0.38"},
      {"prior.x_points", "19"},
  };
  return c;
}

void Config::load_string(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  long row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + std::to_string(row) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    try {
      set(key, trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(origin + ":" + std::to_string(row) + ": " + e.what());
    }
  }
}

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  load_string(ss.str(), path);
}

void Config::set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) throw std::invalid_argument("unknown config key '" + key + "'");
  values_[key] = value;
}

std::string Config::env_name(const std::string& key) {
  std::string out = "NRMPP_";
  for (char ch : key) out += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return out;
}

void Config::apply_env() {
  for (auto& [k, v] : values_)
    if (const char* e = std::getenv(env_name(k).c_str())) v = e;
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("unknown config key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const { return parse_double(get(key), key); }

long Config::get_long(const std::string& key) const {
  const double v = get_double(key);
  if (v != std::floor(v)) throw std::invalid_argument(key + ": expected an integer");
  return static_cast<long>(v);
}

bool Config::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument(key + ": expected true/false");
}

std::vector<double> Config::get_vector(const std::string& key) const {
  std::vector<double> out;
  for (const auto& part : split(get(key), ',')) out.push_back(parse_double(part, key));
  return out;
}

std::string Config::dump() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
  return out.str();
}

// --- data ----------------------------------------------------------------------------

Dataset parse_dataset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  long row = 0;
  int q = -1;
  std::vector<double> coords;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cols = split(line, ',');
    if (q < 0) q = static_cast<int>(cols.size());
    if (static_cast<int>(cols.size()) != q)
      throw std::invalid_argument("data row " + std::to_string(row) + ": expected " + std::to_string(q) + " columns");
    for (std::size_t c = 0; c < cols.size(); ++c) {
      try {
        coords.push_back(parse_double(cols[c], "value"));
      } catch (const std::invalid_argument&) {
        throw std::invalid_argument("data parse error at row " + std::to_string(row) + ", column " +
                                    std::to_string(c + 1) + ": '" + cols[c] + "'");
      }
    }
  }
  if (q <= 0 || coords.empty()) throw std::invalid_argument("data: empty file");
  return Dataset(PointConfig(q, std::move(coords)));
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read data file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str());
}

Dataset make_synthetic(const std::string& generator, long n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("synthetic data: n >= 1");
  Rng rng = make_rng(seed, "data");
  PointConfig pts(1);
  if (generator == "t3mix") {
    std::student_t_distribution<double> t3(3.0);
    for (long i = 0; i < n; ++i) pts.push_back((i < n / 2 ? -5.0 : 5.0) + t3(rng));
  } else if (generator == "gaussmix2") {
    for (long i = 0; i < n; ++i) pts.push_back((i < n / 2 ? -3.0 : 3.0) + rnorm(rng));
  } else {
    throw std::invalid_argument("unknown data generator '" + generator + "'");
  }
  return Dataset(std::move(pts));
}

// --- models ----------------------------------------------------------------------------

ProcessModel build_process(const Config& cfg) {
  const std::string fam = cfg.get("process.family");
  auto region = [&] { return Region(cfg.get_vector("process.region.lower"), cfg.get_vector("process.region.upper")); };
  if (fam == "poisson") {
    Poisson p{cfg.get_double("process.poisson.rate"), region()};
    if (!(p.rate > 0.0)) throw std::invalid_argument("process.poisson.rate must be positive");
    return p;
  }
  if (fam == "strauss") {
    Strauss s;
    s.beta = cfg.get_double("process.strauss.beta");
    s.gamma_s = cfg.get_double("process.strauss.gamma");
    s.radius = cfg.get_double("process.strauss.radius");
    s.region = region();
    s.bd_sweeps = static_cast<int>(cfg.get_long("process.strauss.bd_sweeps"));
    s.mc_samples = static_cast<int>(cfg.get_long("process.strauss.mc_samples"));
    s.mc_seed = static_cast<std::uint64_t>(cfg.get_long("process.strauss.mc_seed"));
    if (!(s.beta > 0.0) || s.gamma_s < 0.0 || s.gamma_s > 1.0 || !(s.radius > 0.0))
      throw std::invalid_argument("process.strauss: need beta > 0, gamma in [0,1], radius > 0");
    if (s.mc_samples < 100) throw std::invalid_argument("process.strauss.mc_samples must be >= 100");
    return s;
  }
  if (fam == "dpp") {
    const std::string basis = cfg.get("process.dpp.basis");
    if (basis != "fourier" && basis != "nystrom") throw std::invalid_argument("process.dpp.basis: fourier or nystrom");
    return make_dpp(cfg.get_double("process.dpp.rho"), cfg.get_double("process.dpp.alpha"), region(),
                    basis == "fourier" ? DppBasis::fourier : DppBasis::nystrom, cfg.get_double("process.dpp.cutoff_tol"),
                    static_cast<int>(cfg.get_long("process.dpp.nystrom_m")), true);
  }
  if (fam == "sncp") {
    Sncp s;
    s.gamma = cfg.get_double("process.sncp.gamma");
    s.kernel_sd = cfg.get_double("process.sncp.kernel_sd");
    s.base.lambda = cfg.get_double("process.sncp.lambda");
    const std::string base = cfg.get("process.sncp.base");
    if (base == "gaussian") {
      s.base.kind = SncpBase::Kind::gaussian;
      s.base.mean = cfg.get_vector("process.sncp.base_mean");
      s.base.sd = cfg.get_double("process.sncp.base_sd");
      if (!(s.base.sd > 0.0)) throw std::invalid_argument("process.sncp.base_sd must be positive");
    } else if (base == "uniform") {
      s.base.kind = SncpBase::Kind::uniform;
      s.base.region = region();
    } else {
      throw std::invalid_argument("process.sncp.base: gaussian or uniform");
    }
    if (!(s.gamma > 0.0) || !(s.kernel_sd > 0.0) || !(s.base.lambda > 0.0))
      throw std::invalid_argument("process.sncp: gamma, kernel_sd, lambda must be positive");
    return s;
  }
  throw std::invalid_argument("process.family: unknown family '" + fam + "'");
}

Model build_model(const Config& cfg) {
  return Model{build_process(cfg), JumpModel(cfg.get_double("jumps.shape"), cfg.get_double("jumps.rate")),
               InvGamma(cfg.get_double("variance.shape"), cfg.get_double("variance.scale"))};
}

ChainConfig build_chain(const Config& cfg) {
  ChainConfig c;
  c.n_iter = cfg.get_long("chain.n_iter");
  c.burn_in = cfg.get_long("chain.burn_in");
  c.thin = cfg.get_long("chain.thin");
  c.seed = static_cast<std::uint64_t>(cfg.get_long("seed"));
  const std::string alg = cfg.get("chain.algorithm");
  if (alg == "conditional") c.algorithm = Algorithm::conditional;
  else if (alg == "marginal") c.algorithm = Algorithm::marginal;
  else throw std::invalid_argument("chain.algorithm: conditional or marginal");
  c.neal_l = static_cast<int>(cfg.get_long("chain.neal_l"));
  c.atom_step = cfg.get_double("chain.atom_step");
  c.log_u_step = cfg.get_double("chain.log_u_step");
  c.atom_mh_steps = static_cast<int>(cfg.get_long("chain.atom_mh_steps"));
  c.gibbs_bd_sweeps = static_cast<int>(cfg.get_long("chain.gibbs_bd_sweeps"));
  c.store_measures = cfg.get_bool("chain.store_measures");
  c.init_clusters = static_cast<int>(cfg.get_long("chain.init_clusters"));
  validate(c);
  return c;
}

Dataset build_dataset(const Config& cfg) {
  const std::string path = cfg.get("data.path");
  if (!path.empty()) return load_dataset(path);
  return make_synthetic(cfg.get("data.generator"), cfg.get_long("data.n"),
                        static_cast<std::uint64_t>(cfg.get_long("data.seed")));
}

// --- prior analysis ------------------------------------------------------------------

std::vector<PriorCurvePoint> prior_analysis(const Config& cfg) {
  const int n = static_cast<int>(cfg.get_long("prior.n"));
  const JumpModel jm(cfg.get_double("prior.alpha"), 1.0);
  const Region region(cfg.get_vector("prior.region.lower"), cfg.get_vector("prior.region.upper"));
  if (region.dim() != 1) throw std::invalid_argument("prior analysis is defined on an interval");
  const ProcessModel pois = Poisson{cfg.get_double("prior.poisson.rate"), region};
  const ProcessModel dpp = make_dpp(cfg.get_double("prior.dpp.rho"), cfg.get_double("prior.dpp.alpha"), region,
                                    DppBasis::nystrom, 1e-6, static_cast<int>(cfg.get_long("prior.dpp.nystrom_m")),
                                    false);
  const double x0 = cfg.get_double("prior.x_min"), x1 = cfg.get_double("prior.x_max");
  const long m = cfg.get_long("prior.x_points");
  if (m < 2 || !(x1 > x0)) throw std::invalid_argument("prior.x_*: need x_max > x_min and at least 2 points");
  std::vector<PriorCurvePoint> out;
  auto eval = [&](const std::string& name, const ProcessModel& pp, const std::vector<double>& ys, double x) {
    double value = std::nan("");
    try {
      value = joint_kn_law(pp, jm, n, PointConfig(1, ys)).value;
    } catch (const std::domain_error&) {
      // the unvalidated Gaussian kernel leaves a Palm eigenvalue above 1 for close anchors
    }
    out.push_back({name, x, static_cast<int>(ys.size()), value});
  };
  for (long i = 0; i < m; ++i) {
    const double x = x0 + (x1 - x0) * i / (m - 1);
    eval("I-poisson", pois, {-x, x}, x);
    eval("I-dpp", dpp, {-x, x}, x);
    eval("II-dpp", dpp, {-0.3, -0.3 + 2.0 * x}, x);
    eval("III-dpp", dpp, {-x, 0.0, x}, x);
  }
  return out;
}

// --- traces ----------------------------------------------------------------------------

Trace read_trace_ndjson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read trace " + path);
  Trace tr;
  std::string line;
  long row = 0;
  bool all_atoms = true;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::invalid_argument(path + ":" + std::to_string(row) + ": " + e.what());
    }
    TraceRecord r;
    r.iteration = j.at("iteration").get<long>();
    r.k = j.at("k").get<int>();
    r.n_groups = j.at("n_groups").get<int>();
    r.n_atoms = j.at("n_atoms").get<int>();
    r.u = j.at("u").get<double>();
    r.total_mass = j.at("total_mass").is_null() ? std::nan("") : j.at("total_mass").get<double>();
    r.allocations = j.at("allocations").get<std::vector<int>>();
    if (j.contains("groups")) {
      r.groups = j.at("groups").get<std::vector<int>>();
      tr.has_groups = true;
    }
    if (j.contains("atoms") && all_atoms) {
      const auto& atoms = j.at("atoms");
      const int q = atoms.empty() ? 1 : static_cast<int>(atoms[0].at("x").size());
      DiscreteMeasure mu(q);
      for (const auto& a : atoms) {
        const auto x = a.at("x").get<std::vector<double>>();
        mu.add(x.data(), a.at("v").get<double>(), a.at("s").get<double>());
      }
      tr.measures.push_back(std::move(mu));
    } else {
      all_atoms = false;
      tr.measures.clear();
    }
    tr.records.push_back(std::move(r));
  }
  if (tr.records.empty()) throw std::invalid_argument("trace " + path + " has no records");
  return tr;
}

std::string version_string() { return std::string(NRMPP_VERSION) + "+" + NRMPP_GIT_REVISION; }

// --- run ------------------------------------------------------------------------------------

namespace {

struct Staging {
  fs::path final_dir, dir;
  std::vector<std::string> files;
  bool committed = false;

  explicit Staging(const std::string& out) : final_dir(out) {
    dir = final_dir / ".staging";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Staging() {
    if (!committed) {
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
  }
  std::string path(const std::string& name) {
    files.push_back(name);
    return (dir / name).string();
  }
  void commit() {
    for (const auto& f : files) fs::rename(dir / f, final_dir / f);
    fs::remove_all(dir);
    committed = true;
  }
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(12);
  return out;
}

void write_matrix_csv(const Eigen::MatrixXd& m, const std::string& path) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

PointConfig build_grid(const Config& cfg, int q) {
  const auto g = cfg.get_vector("output.grid");
  if (g.size() != 3 || !(g[1] > g[0]) || g[2] < 2 || g[2] != std::floor(g[2]))
    throw std::invalid_argument("output.grid: expected min,max,npoints with max > min and npoints >= 2");
  const long m = static_cast<long>(g[2]);
  if (q > 2) throw std::invalid_argument("density grid supported for q <= 2");
  PointConfig grid(q);
  std::vector<double> x(q);
  long total = q == 1 ? m : m * m;
  for (long i = 0; i < total; ++i) {
    x[0] = g[0] + (g[1] - g[0]) * (i % m) / (m - 1);
    if (q == 2) x[1] = g[0] + (g[1] - g[0]) * (i / m) / (m - 1);
    grid.push_back(x.data());
  }
  return grid;
}

void write_summaries(const Trace& tr, const Config& cfg, Staging& stage, int q, nlohmann::json& summary) {
  const auto parts = partitions(tr, Level::component);
  const Eigen::MatrixXd ccm = coclustering(parts);
  write_matrix_csv(ccm, stage.path("coclustering.csv"));
  {
    auto out = open_out(stage.path("kn_posterior.csv"));
    out << "level,k,probability\n";
    const auto pmf = kn_posterior(parts);
    for (std::size_t k = 0; k < pmf.size(); ++k)
      if (pmf[k] > 0.0) out << "component," << k << ',' << pmf[k] << '\n';
    if (tr.has_groups) {
      const auto gp = kn_posterior(tr, Level::group);
      for (std::size_t k = 0; k < gp.size(); ++k)
        if (gp[k] > 0.0) out << "group," << k << ',' << gp[k] << '\n';
    }
  }
  {
    auto out = open_out(stage.path("point_partition.csv"));
    out << "observation,component" << (tr.has_groups ? ",group" : "") << '\n';
    const auto pc = point_partition(ccm, parts);
    std::vector<int> pg;
    if (tr.has_groups) {
      const auto gparts = partitions(tr, Level::group);
      const Eigen::MatrixXd gccm = coclustering(gparts);
      write_matrix_csv(gccm, stage.path("coclustering_groups.csv"));
      pg = point_partition(gccm, gparts);
    }
    for (std::size_t i = 0; i < pc.size(); ++i) {
      out << i << ',' << pc[i];
      if (!pg.empty()) out << ',' << pg[i];
      out << '\n';
    }
  }
  {
    auto out = open_out(stage.path("density.csv"));
    const PointConfig grid = build_grid(cfg, q);
    out << (q == 1 ? "x" : "x1,x2") << ",density\n";
    if (!tr.measures.empty()) {
      const DensityEstimate de = density_estimate(tr.measures, grid);
      summary["density_skipped_empty"] = de.skipped_empty;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        for (int d = 0; d < q; ++d) out << grid[g][d] << ',';
        out << de.values[g] << '\n';
      }
    }
  }
  std::vector<double> ks, us, gs;
  for (const auto& r : tr.records) {
    ks.push_back(r.k);
    us.push_back(r.u);
    gs.push_back(r.n_groups);
  }
  summary["records"] = tr.records.size();
  summary["ess_k"] = ess(ks);
  summary["ess_u"] = ess(us);
  if (tr.has_groups) summary["ess_groups"] = ess(gs);
}

nlohmann::json base_manifest(const std::string& command, const Config& cfg) {
  nlohmann::json m;
  m["command"] = command;
  m["version"] = version_string();
  m["seed"] = cfg.get("seed");
  m["config"] = cfg.values();
  return m;
}

void write_json(const nlohmann::json& j, const std::string& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

int run_fit(const Config& cfg, int chains, Staging& stage, nlohmann::json& manifest) {
  const Dataset data = build_dataset(cfg);
  const Model model = build_model(cfg);
  const ChainConfig chain = build_chain(cfg);
  if (dim(model.pp) != data.dim()) throw std::invalid_argument("data dimension does not match process dimension");
  build_grid(cfg, data.dim());
  std::vector<Trace> traces(chains);
  std::vector<std::string> errors(chains);
  auto work = [&](int c) {
    try {
      traces[c] = run_chain(chain, data, model, c);
    } catch (const std::exception& e) {
      errors[c] = e.what();
    }
  };
  std::vector<std::thread> pool;
  for (int c = 1; c < chains; ++c) pool.emplace_back(work, c);
  work(0);
  for (auto& t : pool) t.join();
  for (int c = 0; c < chains; ++c)
    if (!errors[c].empty()) throw std::runtime_error("chain " + std::to_string(c) + ": " + errors[c]);
  Trace pooled = traces[0];
  for (int c = 1; c < chains; ++c) {
    pooled.records.insert(pooled.records.end(), traces[c].records.begin(), traces[c].records.end());
    pooled.measures.insert(pooled.measures.end(), traces[c].measures.begin(), traces[c].measures.end());
  }
  for (int c = 0; c < chains; ++c) {
    const std::string suffix = c == 0 ? "" : "." + std::to_string(c);
    write_trace_ndjson(traces[c], stage.path("trace" + suffix + ".ndjson"));
    write_trace_csv(traces[c], stage.path("trace" + suffix + ".csv"));
  }
  nlohmann::json summary;
  summary["n"] = data.size();
  summary["chains"] = chains;
  summary["algorithm"] = pooled.algorithm;
  summary["family"] = pooled.family;
  write_summaries(pooled, cfg, stage, data.dim(), summary);
  manifest["summary"] = summary;
  return 0;
}

int run_prior(const Config& cfg, Staging& stage, nlohmann::json& manifest) {
  const auto pts = prior_analysis(cfg);
  auto out = open_out(stage.path("prior_analysis.csv"));
  out << "setting,x,k,value\n";
  long undefined = 0;
  for (const auto& p : pts) {
    out << p.setting << ',' << p.x << ',' << p.k << ',';
    if (std::isnan(p.value)) {
      out << "nan\n";
      ++undefined;
    } else {
      out << p.value << '\n';
    }
  }
  if (undefined > 0)
    std::cerr << "nrmpp prior-analysis: warning: " << undefined << " points undefined (Palm eigenvalue above 1)\n";
  manifest["rows"] = pts.size();
  manifest["undefined_points"] = undefined;
  return 0;
}

int run_simulate(const Config& cfg, Staging& stage, nlohmann::json& manifest) {
  const Model model = build_model(cfg);
  const long n = cfg.get_long("data.n");
  if (n < 1) throw std::invalid_argument("data.n >= 1");
  Rng rng = make_rng(static_cast<std::uint64_t>(cfg.get_long("seed")), "simulate");
  DiscreteMeasure mu(dim(model.pp));
  long tries = 0;
  do {
    if (++tries > 10000) throw std::runtime_error("simulate: prior draws keep producing the zero measure");
    mu = sample_nrm(model.pp, model.jm, model.vprior, rng);
  } while (mu.empty());
  const auto w = mu.normalized();
  std::discrete_distribution<int> pick(w.begin(), w.end());
  const int q = mu.locations.dim();
  auto out = open_out(stage.path("data.csv"));
  auto alloc = open_out(stage.path("allocations.csv"));
  auto atoms = open_out(stage.path("atoms.csv"));
  atoms << "atom,";
  for (int d = 0; d < q; ++d) atoms << "x" << d + 1 << ',';
  atoms << "variance,jump,weight\n";
  for (std::size_t h = 0; h < mu.size(); ++h) {
    atoms << h << ',';
    for (int d = 0; d < q; ++d) atoms << mu.locations[h][d] << ',';
    atoms << mu.variances[h] << ',' << mu.jumps[h] << ',' << w[h] << '\n';
  }
  alloc << "observation,atom\n";
  for (long i = 0; i < n; ++i) {
    const int h = pick(rng);
    for (int d = 0; d < q; ++d) out << (d ? "," : "") << mu.locations[h][d] + std::sqrt(mu.variances[h]) * rnorm(rng);
    out << '\n';
    alloc << i << ',' << h << '\n';
  }
  manifest["atoms"] = mu.size();
  manifest["rows"] = n;
  return 0;
}

int run_summarize(const Config& cfg, const std::string& trace_path, Staging& stage, nlohmann::json& manifest) {
  const std::string path = trace_path.empty() ? (fs::path(cfg.get("output.dir")) / "trace.ndjson").string() : trace_path;
  const Trace tr = read_trace_ndjson(path);
  const int q = tr.measures.empty() ? 1 : tr.measures.front().locations.dim();
  nlohmann::json summary;
  summary["trace"] = path;
  write_summaries(tr, cfg, stage, q, summary);
  manifest["summary"] = summary;
  return 0;
}

}  // namespace

int run(const std::string& command, const Config& cfg, int chains, const std::string& trace_path) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (command != "fit" && command != "prior-analysis" && command != "simulate" && command != "summarize")
      throw std::invalid_argument("unknown command '" + command + "'");
    if (chains < 1) throw std::invalid_argument("--chains must be >= 1");
    // validate everything that can be validated before touching the output directory
    if (command == "fit") {
      build_model(cfg);
      build_chain(cfg);
    } else if (command == "simulate") {
      build_model(cfg);
    }
    const std::string out_dir = cfg.get("output.dir");
    if (out_dir.empty()) throw std::invalid_argument("output.dir must be set");
    Staging stage(out_dir);
    nlohmann::json manifest = base_manifest(command, cfg);
    if (command == "fit") run_fit(cfg, chains, stage, manifest);
    else if (command == "prior-analysis") run_prior(cfg, stage, manifest);
    else if (command == "simulate") run_simulate(cfg, stage, manifest);
    else run_summarize(cfg, trace_path, stage, manifest);
    manifest["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest["outputs"] = stage.files;
    write_json(manifest, stage.path("manifest.json"));
    stage.commit();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "nrmpp " << command << ": error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace nrmpp
