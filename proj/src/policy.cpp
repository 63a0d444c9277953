#include "genrl/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace genrl {

std::size_t PolicyShape::param_count() const {
  std::size_t in = network_input_dim();
  return (in + 1) * hidden1 + (hidden1 + 1) * hidden2 + (hidden2 + 1) * output_dim;
}

void PolicyShape::validate() const {
  if (input_dim == 0 || hidden1 == 0 || hidden2 == 0 || output_dim == 0)
    throw InvalidInput("policy dimensions must be at least 1");
  if (action_lo.size() != output_dim || action_hi.size() != output_dim)
    throw InvalidInput("action bounds do not match the output dimension");
  for (std::size_t k = 0; k < output_dim; ++k)
    if (!(action_lo[k] <= action_hi[k])) throw InvalidInput("action bounds are inverted");
}

PolicyShape PolicyShape::for_env(const Environment& env, bool include_task_index,
                                 std::size_t hidden1, std::size_t hidden2) {
  PolicyShape s;
  s.input_dim = env.state_dim;
  s.hidden1 = hidden1;
  s.hidden2 = hidden2;
  s.output_dim = env.action_dim;
  s.include_task_index = include_task_index;
  s.action_lo = env.action_lo;
  s.action_hi = env.action_hi;
  s.validate();
  return s;
}

PolicyParams init_policy_params(const PolicyShape& shape, Rng& rng) {
  shape.validate();
  PolicyParams p;
  p.flat.reserve(shape.param_count());
  std::normal_distribution<double> normal(0.0, 1.0);
  auto layer = [&](std::size_t in, std::size_t out) {
    double sd = std::sqrt(1.0 / static_cast<double>(in));
    for (std::size_t k = 0; k < in * out; ++k) p.flat.push_back(sd * normal(rng));
    for (std::size_t k = 0; k < out; ++k) p.flat.push_back(0.0);
  };
  layer(shape.network_input_dim(), shape.hidden1);
  layer(shape.hidden1, shape.hidden2);
  layer(shape.hidden2, shape.output_dim);
  return p;
}

namespace {

// y = W x + b, with b stored right after the row-major W.
void dense(const double* w, std::size_t in, std::size_t out, const double* x, double* y) {
  const double* b = w + in * out;
  for (std::size_t o = 0; o < out; ++o) {
    double s = b[o];
    const double* row = w + o * in;
    for (std::size_t k = 0; k < in; ++k) s += row[k] * x[k];
    y[o] = s;
  }
}

}  // namespace

Vec policy_act(const PolicyParams& params, const PolicyShape& shape, std::span<const double> obs,
               std::optional<std::size_t> task_index) {
  if (obs.size() != shape.input_dim)
    throw InvalidInput("observation has dimension " + std::to_string(obs.size()) + ", policy expects " +
                       std::to_string(shape.input_dim));
  if (shape.include_task_index != task_index.has_value())
    throw InvalidInput(shape.include_task_index ? "policy needs the task index"
                                                : "policy does not take a task index");
  if (params.flat.size() != shape.param_count())
    throw InvalidInput("parameter vector has length " + std::to_string(params.flat.size()) +
                       ", shape needs " + std::to_string(shape.param_count()));
  std::size_t in = shape.network_input_dim();
  Vec x(obs.begin(), obs.end());
  if (task_index) x.push_back(0.1 * static_cast<double>(*task_index));
  Vec h1(shape.hidden1), h2(shape.hidden2), out(shape.output_dim);
  const double* w = params.flat.data();
  dense(w, in, shape.hidden1, x.data(), h1.data());
  w += (in + 1) * shape.hidden1;
  for (auto& v : h1) v = std::max(0.0, v);
  dense(w, shape.hidden1, shape.hidden2, h1.data(), h2.data());
  w += (shape.hidden1 + 1) * shape.hidden2;
  for (auto& v : h2) v = std::max(0.0, v);
  dense(w, shape.hidden2, shape.output_dim, h2.data(), out.data());
  for (std::size_t k = 0; k < out.size(); ++k) {
    double t = std::tanh(out[k]);
    out[k] = shape.action_lo[k] + (t + 1.0) / 2.0 * (shape.action_hi[k] - shape.action_lo[k]);
  }
  return out;
}

// ---------------------------------------------------------------------------

void KappaPolynomial::validate() const {
  if (coeffs.empty()) throw InvalidInput("kappa polynomial has no coefficients");
  for (const auto& c : coeffs) {
    if (c.size() != coeffs.front().size()) throw InvalidInput("kappa coefficients differ in length");
    if (!all_finite(c)) throw InvalidInput("kappa coefficients must be finite");
  }
  if (templ == Template::ConstantUpdate && coeffs.size() != 1)
    throw InvalidInput("constant-update template has exactly one coefficient vector");
}

KappaPolynomial KappaPolynomial::identity(std::size_t n, std::size_t degree) {
  if (degree < 1) throw InvalidInput("identity kappa needs degree >= 1");
  KappaPolynomial k;
  k.coeffs.assign(degree + 1, Vec(n, 0.0));
  k.coeffs[1].assign(n, 1.0);
  return k;
}

KappaPolynomial KappaPolynomial::constant_zero(std::size_t n) {
  KappaPolynomial k;
  k.templ = Template::ConstantUpdate;
  k.coeffs.assign(1, Vec(n, 0.0));
  return k;
}

Vec KappaPolynomial::flatten() const {
  Vec out;
  out.reserve(coeffs.size() * length());
  for (const auto& c : coeffs) out.insert(out.end(), c.begin(), c.end());
  return out;
}

KappaPolynomial KappaPolynomial::unflatten(Template templ, std::size_t degree, std::size_t n,
                                           std::span<const double> flat) {
  std::size_t count = templ == Template::ConstantUpdate ? 1 : degree + 1;
  if (flat.size() != count * n) throw InvalidInput("flat kappa has the wrong length");
  KappaPolynomial k;
  k.templ = templ;
  for (std::size_t d = 0; d < count; ++d)
    k.coeffs.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(d * n),
                          flat.begin() + static_cast<std::ptrdiff_t>((d + 1) * n));
  return k;
}

Vec kappa_step(const KappaPolynomial& kappa, std::span<const double> theta) {
  if (theta.size() != kappa.length()) throw InvalidInput("kappa and parameters differ in length");
  Vec out(theta.size());
  if (kappa.templ == KappaPolynomial::Template::ConstantUpdate) {
    for (std::size_t j = 0; j < theta.size(); ++j) out[j] = theta[j] + kappa.coeffs[0][j];
    return out;
  }
  std::size_t m = kappa.degree();
  for (std::size_t j = 0; j < theta.size(); ++j) {
    double v = kappa.coeffs[m][j];
    for (std::size_t d = m; d-- > 0;) v = v * theta[j] + kappa.coeffs[d][j];
    out[j] = v;
  }
  return out;
}

PolicyParams EdgePolicy::instance_params(std::size_t i) const {
  return unroll_kappa(kappa, base, i > offset ? i - offset : 0);
}

PolicyParams unroll_kappa(const KappaPolynomial& kappa, const PolicyParams& base, std::size_t i) {
  PolicyParams p = base;
  for (std::size_t k = 1; k <= i; ++k) {
    p.flat = kappa_step(kappa, p.flat);
    if (!all_finite(p.flat)) throw NumericOverflow(k);
  }
  return p;
}

// ---------------------------------------------------------------------------

void PolicyGenerator::validate() const {
  graph.validate();
  shape.validate();
  if (edges.size() != graph.edges.size()) throw ConsistencyError("generator needs one policy per edge");
  for (const auto& e : edges) {
    if (e.base.flat.size() != shape.param_count())
      throw ConsistencyError("edge base parameters do not match the policy shape");
    e.kappa.validate();
    if (e.kappa.length() != shape.param_count())
      throw ConsistencyError("edge kappa does not match the policy shape");
  }
  for (auto u : graph.branching_vertices()) {
    auto it = guards.find(u);
    if (it == guards.end())
      throw ConsistencyError("branching vertex " + std::to_string(u) + " has no guard");
    auto outs = graph.out_edges(u);
    for (auto label : it->second.labels())
      if (std::find(outs.begin(), outs.end(), label) == outs.end())
        throw ConsistencyError("guard at vertex " + std::to_string(u) + " names a foreign edge");
  }
}

Vec instance_features(const InductiveTask& task, std::size_t i, GuardFeatures mode) {
  if (mode == GuardFeatures::TaskIndex) return {static_cast<double>(i)};
  return instantiate_task(task, i).init.mean();
}

PathPolicy generate_policy(const PolicyGenerator& gen, const InductiveTask& task, std::size_t i) {
  PathPolicy pp;
  pp.instance = i;
  std::size_t u = AbstractGraph::initial();
  pp.vertices.push_back(u);
  Vec features;
  while (!gen.graph.is_final(u)) {
    auto outs = gen.graph.out_edges(u);
    if (outs.empty()) throw ConsistencyError("vertex " + std::to_string(u) + " is a dead end");
    std::size_t e = outs.front();
    if (outs.size() > 1) {
      auto it = gen.guards.find(u);
      if (it == gen.guards.end())
        throw ConsistencyError("branching vertex " + std::to_string(u) + " has no guard");
      if (features.empty()) features = instance_features(task, i, gen.guard_features);
      e = it->second.predict(features);
      if (std::find(outs.begin(), outs.end(), e) == outs.end())
        throw ConsistencyError("guard at vertex " + std::to_string(u) + " chose edge " +
                               std::to_string(e) + ", which does not leave it");
    }
    pp.edges.push_back(e);
    pp.params.push_back(gen.edges[e].instance_params(i));
    u = gen.graph.edges[e].to;
    pp.vertices.push_back(u);
  }
  return pp;
}

PathRollout execute_path_policy(const PathPolicy& pp, const PolicyShape& shape, const RLTask& task,
                                const AbstractGraph& graph, std::size_t max_steps,
                                std::span<const double> s0) {
  PathRollout out;
  out.traj.states.emplace_back(s0.begin(), s0.end());
  std::size_t j = 0;
  std::size_t len = pp.edges.size();
  if (len == 0) {
    out.reached_final = true;
    return out;
  }
  auto target = [&](std::size_t pos) -> const Region& { return graph.regions[pp.vertices[pos + 1]]; };
  if (region_contains(target(0), s0)) ++j;
  std::optional<std::size_t> index;
  if (shape.include_task_index) index = pp.instance;
  while (j < len && out.traj.actions.size() < max_steps) {
    const Vec& s = out.traj.states.back();
    Vec a = policy_act(pp.params[j], shape, observe(task.env, s), index);
    Vec next = env_step(task.env, s, a);
    out.traj.actions.push_back(std::move(a));
    out.step_edge.push_back(j);
    out.traj.states.push_back(std::move(next));
    if (region_contains(target(j), out.traj.states.back())) ++j;
  }
  out.reached_final = j == len;
  return out;
}

PathRollout execute_path_policy(const PathPolicy& pp, const PolicyShape& shape, const RLTask& task,
                                const AbstractGraph& graph, std::size_t max_steps, Rng& rng) {
  Vec s0 = env_reset(task.env, sample_init(task.init, rng));
  return execute_path_policy(pp, shape, task, graph, max_steps, s0);
}

// ---------------------------------------------------------------------------
// Binary format: little-endian throughout.

namespace {

constexpr char kMagic[8] = {'G', 'E', 'N', 'R', 'L', 'P', 'G', '\0'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  void u8(std::uint8_t v) { os_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) u8(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) u8(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void vec(const Vec& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void str(const std::string& s) {
    u64(s.size());
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void pred(const AtomicPredicate& p) {
    u8(static_cast<std::uint8_t>(p.kind));
    str(p.label);
    vec(p.params);
  }
  void preds(const std::vector<AtomicPredicate>& ps) {
    u64(ps.size());
    for (const auto& p : ps) pred(p);
  }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}
  std::uint8_t u8() {
    int c = is_.get();
    if (c == std::char_traits<char>::eof()) throw InvalidInput("generator file is truncated");
    return static_cast<std::uint8_t>(c);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(u8()) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(u8()) << (8 * k);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t count() {
    std::uint64_t n = u64();
    if (n > (1ULL << 32)) throw InvalidInput("generator file has an implausible length field");
    return static_cast<std::size_t>(n);
  }
  Vec vec() {
    Vec v(count());
    for (auto& x : v) x = f64();
    return v;
  }
  std::string str() {
    std::string s(count(), '\0');
    for (auto& c : s) c = static_cast<char>(u8());
    return s;
  }
  AtomicPredicate pred() {
    auto kind = u8();
    if (kind > static_cast<std::uint8_t>(PredicateKind::ReachTip))
      throw InvalidInput("generator file has an unknown predicate kind");
    std::string label = str();
    Vec params = vec();
    return AtomicPredicate::from_params(static_cast<PredicateKind>(kind), std::move(params),
                                        std::move(label));
  }
  std::vector<AtomicPredicate> preds() {
    std::vector<AtomicPredicate> ps(count());
    for (auto& p : ps) p = pred();
    return ps;
  }

 private:
  std::istream& is_;
};

}  // namespace

void save_generator(std::ostream& os, const PolicyGenerator& gen) {
  Writer w(os);
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kVersion);
  const auto& g = gen.graph;
  w.u64(g.vertex_count());
  for (std::size_t u = 0; u < g.vertex_count(); ++u) {
    w.u8(g.regions[u] ? 1 : 0);
    if (g.regions[u]) w.pred(*g.regions[u]);
    w.preds(g.final_safety[u]);
  }
  w.u64(g.edges.size());
  for (const auto& e : g.edges) {
    w.u64(e.from);
    w.u64(e.to);
    w.preds(e.safety);
  }
  w.u64(g.finals.size());
  for (auto f : g.finals) w.u64(f);

  const auto& s = gen.shape;
  w.u64(s.input_dim);
  w.u64(s.hidden1);
  w.u64(s.hidden2);
  w.u64(s.output_dim);
  w.u8(s.include_task_index ? 1 : 0);
  w.vec(s.action_lo);
  w.vec(s.action_hi);
  w.u8(static_cast<std::uint8_t>(gen.guard_features));

  w.u64(gen.edges.size());
  for (const auto& e : gen.edges) {
    w.vec(e.base.flat);
    w.u64(e.offset);
    w.u8(static_cast<std::uint8_t>(e.kappa.templ));
    w.u64(e.kappa.coeffs.size());
    for (const auto& c : e.kappa.coeffs) w.vec(c);
  }
  w.u64(gen.guards.size());
  for (const auto& [u, tree] : gen.guards) {
    w.u64(u);
    w.u64(tree.nodes.size());
    for (const auto& n : tree.nodes) {
      w.u8(n.leaf ? 1 : 0);
      w.u64(n.label);
      w.u64(n.feature);
      w.f64(n.threshold);
      w.u64(n.left);
      w.u64(n.right);
    }
  }
  if (!os) throw InvalidInput("failed to write generator");
}

PolicyGenerator load_generator(std::istream& is) {
  Reader r(is);
  for (char c : kMagic)
    if (r.u8() != static_cast<std::uint8_t>(c)) throw InvalidInput("not a policy generator file");
  if (auto v = r.u32(); v != kVersion)
    throw InvalidInput("unsupported generator version " + std::to_string(v));
  PolicyGenerator gen;
  auto& g = gen.graph;
  std::size_t nv = r.count();
  g.regions.resize(nv);
  g.final_safety.resize(nv);
  for (std::size_t u = 0; u < nv; ++u) {
    if (r.u8()) g.regions[u] = r.pred();
    g.final_safety[u] = r.preds();
  }
  g.edges.resize(r.count());
  for (auto& e : g.edges) {
    e.from = r.count();
    e.to = r.count();
    e.safety = r.preds();
  }
  g.finals.resize(r.count());
  for (auto& f : g.finals) f = r.count();

  auto& s = gen.shape;
  s.input_dim = r.count();
  s.hidden1 = r.count();
  s.hidden2 = r.count();
  s.output_dim = r.count();
  s.include_task_index = r.u8() != 0;
  s.action_lo = r.vec();
  s.action_hi = r.vec();
  auto mode = r.u8();
  if (mode > static_cast<std::uint8_t>(GuardFeatures::InitMean))
    throw InvalidInput("generator file has an unknown guard feature mode");
  gen.guard_features = static_cast<GuardFeatures>(mode);

  gen.edges.resize(r.count());
  for (auto& e : gen.edges) {
    e.base.flat = r.vec();
    e.offset = r.count();
    auto templ = r.u8();
    if (templ > 1) throw InvalidInput("generator file has an unknown kappa template");
    e.kappa.templ = static_cast<KappaPolynomial::Template>(templ);
    e.kappa.coeffs.resize(r.count());
    for (auto& c : e.kappa.coeffs) c = r.vec();
  }
  std::size_t ng = r.count();
  for (std::size_t k = 0; k < ng; ++k) {
    std::size_t u = r.count();
    DecisionTree tree;
    tree.nodes.resize(r.count());
    for (auto& n : tree.nodes) {
      n.leaf = r.u8() != 0;
      n.label = r.count();
      n.feature = r.count();
      n.threshold = r.f64();
      n.left = r.count();
      n.right = r.count();
      if (!n.leaf && (n.left >= tree.nodes.size() || n.right >= tree.nodes.size()))
        throw InvalidInput("generator file has a malformed guard tree");
    }
    gen.guards.emplace(u, std::move(tree));
  }
  gen.validate();
  return gen;
}

void save_generator(const std::string& path, const PolicyGenerator& gen) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidInput("cannot open " + path + " for writing");
  save_generator(os, gen);
}

PolicyGenerator load_generator(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("cannot open " + path);
  return load_generator(is);
}

}  // namespace genrl
