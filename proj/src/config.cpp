#include "sirinv/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "sirinv/errors.hpp"

namespace sirinv {

double GaussianBump::operator()(double x, double y) const {
  const double dx = x - cx, dy = y - cy;
  return background + amplitude * std::exp(-rate * (dx * dx + dy * dy));
}

Grid RunConfig::fine_grid() const {
  return build_grid(domain.a, domain.b, domain.A, domain.T, forward.nx, forward.ny, forward.nt);
}

Grid RunConfig::coarse_grid() const {
  return build_grid(domain.a, domain.b, domain.A, domain.T, observation.nx, observation.ny,
                    observation.nt);
}

namespace {

namespace fs = std::filesystem;

std::string where(const std::string& source, const toml::node* n) {
  std::ostringstream os;
  // Nodes from --set carry no position in the config file.
  if (n && (n->source().begin.line == 0 || (n->source().path && *n->source().path == "--set")))
    return "--set";
  os << source;
  if (n) os << ':' << n->source().begin.line << ':' << n->source().begin.column;
  return os.str();
}

/// One TOML table with typed getters; keys that are never read are reported.
class Section {
 public:
  Section(const toml::table* t, std::string prefix, const std::string& source)
      : t_(t), prefix_(std::move(prefix)), source_(source) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const toml::node* n = t_ ? t_->get(key) : nullptr;
    throw ConfigError(where(source_, n ? n : t_) + ": " + name(key) + ": " + msg);
  }

  std::string name(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  bool has(const std::string& key) const { return t_ && t_->contains(key); }
  bool is_string(const std::string& key) const {
    const toml::node* n = t_ ? t_->get(key) : nullptr;
    return n && n->is_string();
  }

  double num(const std::string& key, double def) {
    const toml::node* n = node(key);
    if (!n) return def;
    if (auto v = n->value_exact<double>()) return check_finite(key, *v);
    if (auto v = n->value_exact<std::int64_t>()) return static_cast<double>(*v);
    fail(key, "expected a number");
  }

  std::int64_t integer(const std::string& key, std::int64_t def) {
    const toml::node* n = node(key);
    if (!n) return def;
    if (auto v = n->value_exact<std::int64_t>()) return *v;
    fail(key, "expected an integer");
  }

  bool boolean(const std::string& key, bool def) {
    const toml::node* n = node(key);
    if (!n) return def;
    if (auto v = n->value_exact<bool>()) return *v;
    fail(key, "expected true or false");
  }

  std::string str(const std::string& key, const std::string& def) {
    const toml::node* n = node(key);
    if (!n) return def;
    if (auto v = n->value_exact<std::string>()) return *v;
    fail(key, "expected a string");
  }

  template <std::size_t N>
  std::array<double, N> vec(const std::string& key, const std::array<double, N>& def) {
    const toml::node* n = node(key);
    if (!n) return def;
    const toml::array* arr = n->as_array();
    if (!arr || arr->size() != N) fail(key, "expected an array of " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
      const toml::node& e = *arr->get(i);
      if (auto v = e.value_exact<double>()) out[i] = check_finite(key, *v);
      else if (auto w = e.value_exact<std::int64_t>()) out[i] = static_cast<double>(*w);
      else fail(key, "expected an array of numbers");
    }
    return out;
  }

  Section sub(const std::string& key) {
    const toml::node* n = node(key);
    if (n && !n->is_table()) fail(key, "expected a table");
    return Section(n ? n->as_table() : nullptr, name(key), source_);
  }

  /// Rejects keys that were never read (typos, stale options).
  void finish() const {
    if (!t_) return;
    for (const auto& [k, v] : *t_) {
      const std::string key(k.str());
      if (!used_.count(key))
        throw ConfigError(where(source_, &v) + ": " + name(key) + ": unknown key");
    }
  }

 private:
  const toml::node* node(const std::string& key) {
    used_.insert(key);
    return t_ ? t_->get(key) : nullptr;
  }
  double check_finite(const std::string& key, double v) const {
    if (!std::isfinite(v)) fail(key, "must be finite");
    return v;
  }

  const toml::table* t_;
  std::string prefix_;
  const std::string& source_;
  std::set<std::string> used_;
};

void apply_override(toml::table& root, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + spec + "': expected key=value");
  std::string path = spec.substr(0, eq), text = spec.substr(eq + 1);
  while (!path.empty() && path.back() == ' ') path.pop_back();
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string p; std::getline(ss, p, '.');) {
    if (p.empty()) throw ConfigError("override '" + spec + "': empty key segment");
    parts.push_back(p);
  }
  toml::table* t = &root;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    toml::node* n = t->get(parts[i]);
    if (!n) n = &t->insert_or_assign(parts[i], toml::table{}).first->second;
    if (!n->is_table()) throw ConfigError("override '" + spec + "': '" + parts[i] + "' is not a table");
    t = n->as_table();
  }
  try {
    toml::table parsed = toml::parse("v = " + text, std::string_view("--set"));
    t->insert_or_assign(parts.back(), std::move(*parsed.get("v")));
  } catch (const toml::parse_error&) {
    t->insert_or_assign(parts.back(), text);  // bare word
  }
}

GaussianBump read_bump(Section s, const GaussianBump& def) {
  GaussianBump b = def;
  b.amplitude = s.num("amplitude", def.amplitude);
  const auto c = s.vec<2>("center", {def.cx, def.cy});
  b.cx = c[0];
  b.cy = c[1];
  b.rate = s.num("rate", def.rate);
  if (b.rate < 0.0) s.fail("rate", "must be >= 0");
  b.background = s.num("background", def.background);
  s.finish();
  return b;
}

CoefficientShape read_shape(Section s, const std::string& base_dir) {
  CoefficientShape c;
  c.mask = s.str("mask", "");
  if (!c.mask.empty()) {
    fs::path p(c.mask);
    if (p.is_relative()) p = fs::path(base_dir) / p;
    if (!fs::exists(p)) s.fail("mask", "file '" + p.string() + "' does not exist");
    c.mask = p.lexically_normal().string();
  }
  const auto box = s.vec<4>("box", {c.box.x0, c.box.x1, c.box.y0, c.box.y1});
  c.box = {box[0], box[1], box[2], box[3]};
  if (!(c.box.x1 > c.box.x0 && c.box.y1 > c.box.y0)) s.fail("box", "expected [x0, x1, y0, y1] with x0 < x1, y0 < y1");
  c.smoothing = s.num("smoothing", 0.0);
  if (c.smoothing < 0.0) s.fail("smoothing", "must be >= 0");
  c.inside = s.num("inside", 0.0);
  c.outside = s.num("outside", 0.0);
  s.finish();
  return c;
}

int grid_count(Section& s, const std::string& key, int def) {
  const auto v = s.integer(key, def);
  if (v < 1 || v > 100000) s.fail(key, "out of range");
  return static_cast<int>(v);
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source,
                       const std::string& base_dir, const std::vector<std::string>& overrides) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ':' << e.source().begin.line << ':' << e.source().begin.column << ": "
       << e.description();
    throw ConfigError(os.str());
  }
  for (const auto& o : overrides) apply_override(root, o);

  RunConfig cfg;
  cfg.source = source;
  Section top(&root, "", cfg.source);

  {
    Section s = top.sub("domain");
    cfg.domain.a = s.num("a", cfg.domain.a);
    cfg.domain.b = s.num("b", cfg.domain.b);
    cfg.domain.A = s.num("A", cfg.domain.A);
    cfg.domain.T = s.num("T", cfg.domain.T);
    if (!(cfg.domain.b > cfg.domain.a)) s.fail("b", "must exceed a");
    if (!(cfg.domain.A > 0.0)) s.fail("A", "must be > 0");
    if (!(cfg.domain.T > 0.0)) s.fail("T", "must be > 0");
    s.finish();
  }
  {
    Section s = top.sub("forward");
    auto& f = cfg.forward;
    f.nx = grid_count(s, "nx", f.nx);
    f.ny = grid_count(s, "ny", f.ny);
    f.nt = grid_count(s, "nt", f.nt);
    if (s.has("c") && s.has("eta")) s.fail("eta", "give either c or eta, not both");
    if (s.has("eta")) {
      const double eta = s.num("eta", 0.0);
      f.c = 0.5 * eta * eta;
    } else {
      f.c = s.num("c", f.c);
    }
    if (f.c < 0.0) s.fail("c", "must be >= 0");
    const auto shared = s.vec<2>("velocity", f.velocity[0]);
    const char* names[3] = {"S", "I", "R"};
    for (int p = 0; p < 3; ++p) f.velocity[p] = s.vec<2>(std::string("velocity_") + names[p], shared);
    f.picard_iterations = static_cast<int>(s.integer("picard_iterations", f.picard_iterations));
    if (f.picard_iterations < 1) s.fail("picard_iterations", "must be >= 1");
    Section init = s.sub("initial");
    for (int p = 0; p < 3; ++p) f.initial[p] = read_bump(init.sub(names[p]), f.initial[p]);
    init.finish();
    f.beta = read_shape(s.sub("beta"), base_dir);
    f.gamma = read_shape(s.sub("gamma"), base_dir);
    s.finish();
  }
  {
    Section s = top.sub("observation");
    auto& o = cfg.observation;
    o.nx = grid_count(s, "nx", o.nx);
    o.ny = grid_count(s, "ny", o.ny);
    o.nt = grid_count(s, "nt", o.nt);
    o.sigma = s.num("sigma", o.sigma);
    if (o.sigma < 0.0 || o.sigma >= 1.0) s.fail("sigma", "must lie in [0, 1)");
    const auto seed = s.integer("seed", static_cast<std::int64_t>(o.seed));
    if (seed < 0) s.fail("seed", "must be >= 0");
    o.seed = static_cast<std::uint64_t>(seed);
    o.kappa_floor = s.num("kappa_floor", o.kappa_floor);
    if (o.kappa_floor < 0.0) s.fail("kappa_floor", "must be >= 0");
    s.finish();
  }
  {
    Section s = top.sub("inversion");
    auto& c = cfg.inversion.carleman;
    c.lambda = s.num("lambda", c.lambda);
    c.xi = s.num("xi", c.xi);
    c.theory_mode = s.boolean("theory_mode", c.theory_mode);
    try {
      c.norm = parse_regularization_norm(s.str("norm", to_string(c.norm)));
    } catch (const std::invalid_argument& e) {
      s.fail("norm", e.what());
    }
    cfg.inversion.time_averaged = s.boolean("time_averaged", cfg.inversion.time_averaged);
    c.b = cfg.domain.b;

    Section o = s.sub("optimizer");
    auto& oc = cfg.inversion.optimizer;
    try {
      oc.mode = parse_optimizer_mode(o.str("mode", to_string(oc.mode)));
    } catch (const std::invalid_argument& e) {
      o.fail("mode", e.what());
    }
    oc.sigma = o.num("sigma", oc.sigma);
    oc.backtrack = o.num("backtrack", oc.backtrack);
    oc.armijo = o.num("armijo", oc.armijo);
    oc.grad_tol = o.num("grad_tol", oc.grad_tol);
    oc.max_iters = static_cast<int>(o.integer("max_iters", oc.max_iters));
    oc.lbfgs_memory = static_cast<int>(o.integer("lbfgs_memory", oc.lbfgs_memory));
    oc.max_halvings = static_cast<int>(o.integer("max_halvings", oc.max_halvings));
    if (o.has("gradient_scale")) {
      if (o.is_string("gradient_scale")) {
        if (o.str("gradient_scale", "") != "volume")
          o.fail("gradient_scale", "expected \"volume\" or a positive number");
        cfg.inversion.volume_gradient_scale = true;
      } else {
        cfg.inversion.volume_gradient_scale = false;
        oc.gradient_scale = o.num("gradient_scale", 1.0);
      }
    }
    try {
      validate(oc);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where(cfg.source, root.get("inversion")) + ": inversion.optimizer: " + e.what());
    }
    o.finish();
    s.finish();
  }
  {
    Section s = top.sub("metrics");
    cfg.metrics.eta = s.num("eta", cfg.metrics.eta);
    if (!(cfg.metrics.eta > 0.0 && cfg.metrics.eta <= 1.0)) s.fail("eta", "must lie in (0, 1]");
    cfg.metrics.boundary_layers = static_cast<int>(s.integer("boundary_layers", 0));
    if (cfg.metrics.boundary_layers < 0) s.fail("boundary_layers", "must be >= 0");
    s.finish();
  }
  {
    Section s = top.sub("output");
    auto& o = cfg.output;
    o.dir = s.str("dir", o.dir);
    o.forward = s.str("forward", (fs::path(o.dir) / "forward").string());
    o.data = s.str("data", (fs::path(o.dir) / "data").string());
    o.inversion = s.str("inversion", (fs::path(o.dir) / "invert").string());
    s.finish();
  }
  top.finish();

  Grid fine, coarse;
  try {
    fine = cfg.fine_grid();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where(cfg.source, root.get("forward")) + ": forward grid: " + e.what());
  }
  try {
    coarse = cfg.coarse_grid();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where(cfg.source, root.get("observation")) + ": observation grid: " + e.what());
  }
  if (!grid_nests(coarse, fine))
    throw ConfigError(where(cfg.source, root.get("observation")) +
                      ": observation grid does not nest in the forward grid (integer stride per axis)");
  try {
    validate(cfg.inversion.carleman, coarse);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where(cfg.source, root.get("inversion")) + ": inversion: " + e.what());
  }

  std::ostringstream os;
  os << root;
  cfg.text = os.str();
  return cfg;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto dir = fs::path(path).parent_path();
  return parse_config(ss.str(), path, dir.empty() ? "." : dir.string(), overrides);
}

}  // namespace sirinv
