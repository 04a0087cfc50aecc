#include "tl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "tl/math.hpp"
#include "tl/parallel.hpp"
#include "tl/rng.hpp"

namespace tl {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::vector<double> parse_args(const std::string& inside, const std::string& context) {
  std::vector<double> args;
  std::stringstream ss(inside);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      args.push_back(std::stod(trim(item)));
    } catch (const std::exception&) {
      throw ConfigError(context + ": bad numeric argument '" + item + "'");
    }
  }
  return args;
}

}  // namespace

CovariateGen CovariateGen::parse(const std::string& name, const std::string& text) {
  CovariateGen g;
  g.name = name;
  std::string s = trim(text);

  auto read_call = [&](std::size_t at) -> std::pair<std::string, std::vector<double>> {
    auto open = s.find('(', at);
    auto close = s.find(')', at);
    if (open == std::string::npos || close == std::string::npos || close < open) {
      throw ConfigError("covariate " + name + ": expected dist(args), got '" + text + "'");
    }
    return {trim(s.substr(at, open - at)), parse_args(s.substr(open + 1, close - open - 1),
                                                       "covariate " + name)};
  };

  auto [dist_name, args] = read_call(0);
  if (dist_name == "bernoulli") {
    if (args.size() != 1 || args[0] < 0.0 || args[0] > 1.0) {
      throw ConfigError("covariate " + name + ": bernoulli needs one probability argument");
    }
    g.dist = Dist::bernoulli;
    g.p1 = args[0];
  } else if (dist_name == "uniform") {
    if (args.size() != 2 || args[0] >= args[1]) {
      throw ConfigError("covariate " + name + ": uniform needs lo < hi");
    }
    g.dist = Dist::uniform;
    g.p1 = args[0];
    g.p2 = args[1];
  } else if (dist_name == "normal") {
    if (args.size() != 2 || args[1] <= 0.0) {
      throw ConfigError("covariate " + name + ": normal needs mean and positive sd");
    }
    g.dist = Dist::normal;
    g.p1 = args[0];
    g.p2 = args[1];
  } else {
    throw ConfigError("covariate " + name + ": unknown distribution '" + dist_name + "'");
  }

  auto clip_at = s.find("clip", s.find(')'));
  if (clip_at != std::string::npos) {
    auto [kw, args2] = read_call(clip_at);
    if (kw != "clip" || args2.size() != 2 || args2[0] >= args2[1]) {
      throw ConfigError("covariate " + name + ": clip needs (lo, hi) with lo < hi");
    }
    g.clip_range = {args2[0], args2[1]};
  }
  return g;
}

std::string CovariateGen::text() const {
  std::ostringstream os;
  switch (dist) {
    case Dist::bernoulli: os << "bernoulli(" << p1 << ")"; break;
    case Dist::uniform: os << "uniform(" << p1 << "," << p2 << ")"; break;
    case Dist::normal: os << "normal(" << p1 << "," << p2 << ")"; break;
  }
  if (clip_range) os << " clip(" << clip_range->first << "," << clip_range->second << ")";
  return os.str();
}

LinearLogistic LinearLogistic::parse(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (c != ' ' && c != '\t') s += c;
  }
  if (s.empty()) throw ConfigError("empty linear expression");

  // Split into signed terms; +/- inside an exponent (e.g. 1e-3) stays put.
  std::vector<std::string> chunks;
  std::string cur;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if ((c == '+' || c == '-') && i > 0 && s[i - 1] != 'e' && s[i - 1] != 'E') {
      chunks.push_back(cur);
      cur.clear();
    }
    cur += c;
  }
  chunks.push_back(cur);

  LinearLogistic out;
  for (const auto& chunk : chunks) {
    if (chunk.empty()) continue;
    Term term;
    term.coef = 1.0;
    std::string body = chunk;
    if (body[0] == '+') {
      body = body.substr(1);
    } else if (body[0] == '-') {
      term.coef = -1.0;
      body = body.substr(1);
    }
    if (body.empty()) throw ConfigError("expression '" + text + "': dangling sign");
    std::stringstream ss(body);
    std::string factor;
    while (std::getline(ss, factor, '*')) {
      if (factor.empty()) throw ConfigError("expression '" + text + "': empty factor");
      char* end = nullptr;
      double v = std::strtod(factor.c_str(), &end);
      if (end == factor.c_str() + factor.size()) {
        term.coef *= v;
      } else {
        term.vars.push_back(factor);
      }
    }
    out.terms.push_back(std::move(term));
  }
  return out;
}

double LinearLogistic::logit_at(const std::map<std::string, double>& values) const {
  double total = 0.0;
  for (const auto& t : terms) {
    double v = t.coef;
    for (const auto& var : t.vars) {
      auto it = values.find(var);
      if (it == values.end()) throw ConfigError("expression references unknown variable " + var);
      v *= it->second;
    }
    total += v;
  }
  return total;
}

double LinearLogistic::prob_at(const std::map<std::string, double>& values) const {
  return expit(logit_at(values));
}

std::vector<std::string> LinearLogistic::variables() const {
  std::set<std::string> seen;
  for (const auto& t : terms) {
    for (const auto& v : t.vars) seen.insert(v);
  }
  return {seen.begin(), seen.end()};
}

std::string LinearLogistic::text() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& t : terms) {
    double c = t.coef;
    if (!first) {
      os << (c < 0 ? " - " : " + ");
      c = std::abs(c);
    }
    first = false;
    os << c;
    for (const auto& v : t.vars) os << "*" << v;
  }
  return os.str();
}

void DgpSpec::check() const {
  std::set<std::string> declared{"A"};
  for (const auto& c : covariates) {
    if (c.name == "A" || c.name == "Y") {
      throw ConfigError("covariate name '" + c.name + "' is reserved");
    }
    if (!declared.insert(c.name).second) {
      throw ConfigError("duplicate covariate '" + c.name + "'");
    }
  }
  for (const auto& v : treatment_model.variables()) {
    if (v == "A") throw ConfigError("treatment model cannot reference A");
    if (!declared.count(v)) throw ConfigError("treatment model references undeclared " + v);
  }
  for (const auto& v : outcome_model.variables()) {
    if (!declared.count(v)) throw ConfigError("outcome model references undeclared " + v);
  }
}

namespace {

double draw_covariate(const CovariateGen& c, Rng& rng) {
  double v = 0.0;
  switch (c.dist) {
    case CovariateGen::Dist::bernoulli: v = rng.bernoulli(c.p1) ? 1.0 : 0.0; break;
    case CovariateGen::Dist::uniform: v = rng.uniform(c.p1, c.p2); break;
    case CovariateGen::Dist::normal: v = rng.normal(c.p1, c.p2); break;
  }
  if (c.clip_range) v = clip(v, c.clip_range->first, c.clip_range->second);
  return v;
}

}  // namespace

Dataset generate(const DgpSpec& dgp, std::size_t n, std::uint64_t seed) {
  dgp.check();
  if (n == 0) throw ConfigError("generate: n must be positive");
  Rng rng(seed);

  std::vector<Column> cols;
  for (const auto& c : dgp.covariates) {
    Column col;
    col.spec = {c.name, Role::covariate, Timing::baseline,
                c.dist == CovariateGen::Dist::bernoulli ? Kind::binary : Kind::continuous};
    col.values.reserve(n);
    cols.push_back(std::move(col));
  }
  Column a_col;
  a_col.spec = {"A", Role::treatment, Timing::baseline, Kind::binary};
  Column y_col;
  y_col.spec = {"Y", Role::outcome, Timing::baseline, Kind::binary};

  std::map<std::string, double> row;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dgp.covariates.size(); ++j) {
      double v = draw_covariate(dgp.covariates[j], rng);
      cols[j].values.push_back(v);
      row[dgp.covariates[j].name] = v;
    }
    double a = rng.bernoulli(dgp.treatment_model.prob_at(row)) ? 1.0 : 0.0;
    row["A"] = a;
    a_col.values.push_back(a);
    y_col.values.push_back(rng.bernoulli(dgp.outcome_model.prob_at(row)) ? 1.0 : 0.0);
  }
  cols.push_back(std::move(a_col));
  cols.push_back(std::move(y_col));
  return Dataset(std::move(cols), n);
}

OracleEstimand true_psi(const DgpSpec& dgp, std::size_t mc_size, std::uint64_t seed) {
  dgp.check();
  if (mc_size < 100000) throw ConfigError("true_psi: mc_size must be at least 1e5");
  Rng rng(seed);

  double sum_d = 0.0, sum_d2 = 0.0, sum_q1 = 0.0, sum_q0 = 0.0;
  std::map<std::string, double> row;
  for (std::size_t i = 0; i < mc_size; ++i) {
    for (const auto& c : dgp.covariates) row[c.name] = draw_covariate(c, rng);
    row["A"] = 1.0;
    double q1 = dgp.outcome_model.prob_at(row);
    row["A"] = 0.0;
    double q0 = dgp.outcome_model.prob_at(row);
    double d = q1 - q0;
    sum_d += d;
    sum_d2 += d * d;
    sum_q1 += q1;
    sum_q0 += q0;
  }
  const double m = static_cast<double>(mc_size);
  OracleEstimand o;
  o.mc_size = mc_size;
  o.rd = sum_d / m;
  double var = std::max(0.0, sum_d2 / m - o.rd * o.rd);
  o.mc_se_rd = std::sqrt(var / m);
  double mu1 = sum_q1 / m, mu0 = sum_q0 / m;
  o.rr = mu1 / mu0;
  o.odds_ratio = (mu1 / (1.0 - mu1)) / (mu0 / (1.0 - mu0));
  return o;
}

EstimatorKind estimator_kind_from_string(const std::string& s) {
  if (s == "tmle") return EstimatorKind::tmle;
  if (s == "gcomp") return EstimatorKind::gcomp;
  if (s == "oracle") return EstimatorKind::oracle;
  throw ConfigError("unknown estimator kind: " + s);
}

std::string to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::tmle: return "tmle";
    case EstimatorKind::gcomp: return "gcomp";
    case EstimatorKind::oracle: return "oracle";
  }
  return "?";
}

namespace {

struct RepResult {
  double estimate = 0.0;
  std::optional<double> se, lo, hi;
};

RepResult run_estimator(const EstimatorConfig& cfg, const Dataset& ds,
                        const std::vector<std::string>& adjustment, std::uint64_t seed) {
  RepResult r;
  if (cfg.kind == EstimatorKind::oracle) {
    r.estimate = cfg.oracle_value;
    return r;
  }
  NuisanceOptions opt;
  opt.q_library = cfg.q_library;
  opt.g_library = cfg.kind == EstimatorKind::gcomp
                      ? std::vector<LearnerSpec>{LearnerSpec::make(LearnerKind::intercept_only)}
                      : cfg.g_library;
  opt.adjustment = adjustment;
  opt.q_interactions = cfg.q_interactions;
  opt.V = cfg.V;
  opt.seed = seed;
  opt.g_bound = cfg.g_bound;
  if (cfg.kind == EstimatorKind::gcomp) {
    NuisanceFits nf = fit_nuisances(ds, opt);
    r.estimate = gcomp_estimate(nf.q1, nf.q0);
    return r;
  }
  TmleResult t = run_tmle(ds, opt);
  r.estimate = t.psi_rd;
  r.se = t.se_rd;
  r.lo = t.ci_rd_lo;
  r.hi = t.ci_rd_hi;
  return r;
}

}  // namespace

ReplicationSummary replicate_study(const DgpSpec& dgp, std::size_t n, int reps,
                                   const std::vector<EstimatorConfig>& estimators,
                                   const ReplicateOptions& opt) {
  if (reps < 1) throw ConfigError("replicate_study: reps must be at least 1");
  if (estimators.empty()) throw ConfigError("replicate_study: no estimators configured");
  dgp.check();

  OracleEstimand oracle = true_psi(dgp, opt.mc_size, opt.oracle_seed);

  std::vector<std::string> adjustment;
  for (const auto& c : dgp.covariates) adjustment.push_back(c.name);

  // results[e][i] = estimator e on replicate i
  std::vector<std::vector<RepResult>> results(
      estimators.size(), std::vector<RepResult>(static_cast<std::size_t>(reps)));

  parallel_for(static_cast<std::size_t>(reps), opt.threads, [&](std::size_t i) {
    std::uint64_t rep_seed = dgp.seed + i;
    try {
      Dataset ds = generate(dgp, n, rep_seed);
      for (std::size_t e = 0; e < estimators.size(); ++e) {
        results[e][i] = run_estimator(estimators[e], ds, adjustment, rep_seed);
      }
    } catch (const Error& err) {
      throw EstimationError("replicate " + std::to_string(i) + " (seed " +
                            std::to_string(rep_seed) + ") failed: " + err.what());
    }
  });

  ReplicationSummary summary;
  summary.reps = reps;
  summary.n = n;
  summary.true_rd = oracle.rd;
  summary.oracle_mc_se = oracle.mc_se_rd;

  for (std::size_t e = 0; e < estimators.size(); ++e) {
    EstimatorSummary s;
    s.name = estimators[e].name;
    s.reps = reps;
    Eigen::VectorXd est(reps);
    for (int i = 0; i < reps; ++i) est(i) = results[e][static_cast<std::size_t>(i)].estimate;
    s.mean_estimate = est.mean();
    s.mean_bias = s.mean_estimate - oracle.rd;
    if (reps > 1) s.sd_estimate = sample_sd(est);
    if (results[e][0].se) {
      double se_sum = 0.0, width_sum = 0.0;
      int covered = 0;
      for (int i = 0; i < reps; ++i) {
        const auto& r = results[e][static_cast<std::size_t>(i)];
        se_sum += *r.se;
        width_sum += *r.hi - *r.lo;
        if (*r.lo <= oracle.rd && oracle.rd <= *r.hi) ++covered;
      }
      s.mean_se = se_sum / reps;
      s.mean_ci_width = width_sum / reps;
      s.coverage = static_cast<double>(covered) / reps;
    }
    summary.estimators.push_back(std::move(s));
  }
  return summary;
}

Dataset e8_dataset() {
  // (W, A, Y) triples; both treatment arms present in both covariate strata.
  const double rows[8][3] = {
      {0, 1, 1}, {0, 1, 0}, {0, 0, 0}, {0, 0, 0},
      {1, 1, 1}, {1, 1, 1}, {1, 0, 1}, {1, 0, 0},
  };
  Column w{{"W", Role::covariate, Timing::baseline, Kind::binary}, {}, {}};
  Column a{{"A", Role::treatment, Timing::baseline, Kind::binary}, {}, {}};
  Column y{{"Y", Role::outcome, Timing::baseline, Kind::binary}, {}, {}};
  for (const auto& r : rows) {
    w.values.push_back(r[0]);
    a.values.push_back(r[1]);
    y.values.push_back(r[2]);
  }
  return Dataset({w, a, y}, 8);
}

double e8_stratified_rd() {
  Dataset ds = e8_dataset();
  Eigen::VectorXd w = ds.numeric("W"), a = ds.numeric("A"), y = ds.numeric("Y");
  double rd = 0.0;
  for (double stratum : {0.0, 1.0}) {
    double n_s = 0, n1 = 0, n0 = 0, y1 = 0, y0 = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      if (w(i) != stratum) continue;
      ++n_s;
      if (a(i) == 1.0) {
        ++n1;
        y1 += y(i);
      } else {
        ++n0;
        y0 += y(i);
      }
    }
    rd += (n_s / static_cast<double>(w.size())) * (y1 / n1 - y0 / n0);
  }
  return rd;
}

DgpSpec dgp_a() {
  DgpSpec dgp;
  dgp.covariates = {
      CovariateGen::parse("w1", "bernoulli(0.4)"),
      CovariateGen::parse("w2", "uniform(0,1)"),
      CovariateGen::parse("w3", "normal(0,1) clip(-3,3)"),
  };
  dgp.treatment_model = LinearLogistic::parse("-0.4 + 0.8*w1 + 0.6*w2 - 0.3*w3");
  dgp.outcome_model =
      LinearLogistic::parse("-1.2 + 0.9*A + 0.5*w1 - 0.7*w2 + 0.4*w3 + 0.4*A*w1");
  dgp.seed = 20170704;
  return dgp;
}

}  // namespace tl
