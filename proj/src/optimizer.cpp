#include "sirinv/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "sirinv/errors.hpp"

namespace sirinv {

ConstraintSet::ConstraintSet(const ObservationSet& obs) : grid_(obs.grid) {
  const Grid& g = grid_;
  if (g.nx < 4 || g.ny < 2) throw std::invalid_argument("constraints: grid too small");
  per_component_ = g.nodes_t() * static_cast<std::size_t>(g.ny - 1) * static_cast<std::size_t>(g.nx - 2);
  for (int c = 0; c < kWComponents; ++c) {
    auto& f = F_[static_cast<std::size_t>(c)];
    f.resize(g.nodes_t() * g.nodes_y());
    for (int k = 0; k <= g.nt; ++k)
      for (int j = 0; j <= g.ny; ++j) f[BoundaryTrace::side_index(g, k, j, true)] = obs.F(c, k, j);
    G_[static_cast<std::size_t>(c)] = obs.G(c);
  }
}

std::size_t ConstraintSet::free_index(int k, int j, int i) const {
  return (static_cast<std::size_t>(k) * static_cast<std::size_t>(grid_.ny - 1) +
          static_cast<std::size_t>(j - 1)) *
             static_cast<std::size_t>(grid_.nx - 2) +
         static_cast<std::size_t>(i - 1);
}

std::vector<double> ConstraintSet::eliminate(const WField& W) const {
  if (!(W.grid == grid_)) throw std::invalid_argument("constraints: grid mismatch");
  std::vector<double> z(free_size());
  for (int c = 0; c < kWComponents; ++c) {
    const std::size_t off = static_cast<std::size_t>(c) * per_component_;
    for (int k = 0; k <= grid_.nt; ++k)
      for (int j = 1; j <= grid_.ny - 1; ++j)
        for (int i = 1; i <= grid_.nx - 2; ++i) z[off + free_index(k, j, i)] = W(c, k, j, i);
  }
  return z;
}

void ConstraintSet::apply_relations(WField& W, bool homogeneous) const {
  const Grid& g = grid_;
  const int nx = g.nx, ny = g.ny;
  const double data = homogeneous ? 0.0 : 1.0;
  for (int c = 0; c < kWComponents; ++c) {
    const auto& G = G_[static_cast<std::size_t>(c)];
    const auto& F = F_[static_cast<std::size_t>(c)];
    for (int k = 0; k <= g.nt; ++k) {
      for (int i = 1; i <= nx - 2; ++i) {
        const double gb = data * G.bottom[BoundaryTrace::side_index(g, k, i, false)];
        const double gt = data * G.top[BoundaryTrace::side_index(g, k, i, false)];
        W(c, k, 0, i) = (4.0 * W(c, k, 1, i) - W(c, k, 2, i) + 2.0 * g.hy * gb) / 3.0;
        W(c, k, ny, i) = (4.0 * W(c, k, ny - 1, i) - W(c, k, ny - 2, i) + 2.0 * g.hy * gt) / 3.0;
      }
      for (int j = 0; j <= ny; ++j) {
        const std::size_t s = BoundaryTrace::side_index(g, k, j, true);
        const double gl = data * G.left[s], gr = data * G.right[s], f = data * F[s];
        W(c, k, j, 0) = (4.0 * W(c, k, j, 1) - W(c, k, j, 2) + 2.0 * g.hx * gl) / 3.0;
        W(c, k, j, nx) = f;
        W(c, k, j, nx - 1) = (W(c, k, j, nx - 2) - 2.0 * g.hx * gr + 3.0 * f) / 4.0;
      }
    }
  }
}

WField ConstraintSet::expand(std::span<const double> z) const {
  if (z.size() != free_size()) throw std::invalid_argument("constraints: free vector size");
  WField W(grid_);
  for (int c = 0; c < kWComponents; ++c) {
    const std::size_t off = static_cast<std::size_t>(c) * per_component_;
    for (int k = 0; k <= grid_.nt; ++k)
      for (int j = 1; j <= grid_.ny - 1; ++j)
        for (int i = 1; i <= grid_.nx - 2; ++i) W(c, k, j, i) = z[off + free_index(k, j, i)];
  }
  apply_relations(W, false);
  return W;
}

std::vector<double> ConstraintSet::expand_transpose(const WField& grad) const {
  const Grid& g = grid_;
  const int nx = g.nx, ny = g.ny;
  WField acc = grad;
  for (int c = 0; c < kWComponents; ++c)
    for (int k = 0; k <= g.nt; ++k) {
      // Undo the x-relations first, since they may read y-eliminated nodes.
      for (int j = 0; j <= ny; ++j) {
        acc(c, k, j, nx - 2) += 0.25 * acc(c, k, j, nx - 1);
        const double gl = acc(c, k, j, 0);
        acc(c, k, j, 1) += 4.0 / 3.0 * gl;
        acc(c, k, j, 2) -= gl / 3.0;
      }
      for (int i = 1; i <= nx - 2; ++i) {
        const double gb = acc(c, k, 0, i), gt = acc(c, k, ny, i);
        acc(c, k, 1, i) += 4.0 / 3.0 * gb;
        acc(c, k, 2, i) -= gb / 3.0;
        acc(c, k, ny - 1, i) += 4.0 / 3.0 * gt;
        acc(c, k, ny - 2, i) -= gt / 3.0;
      }
    }
  return eliminate(acc);
}

double ConstraintSet::residual(const WField& W) const {
  const Grid& g = grid_;
  const int nx = g.nx, ny = g.ny;
  double worst = 0.0;
  auto track = [&](double r) { worst = std::max(worst, std::abs(r)); };
  for (int c = 0; c < kWComponents; ++c) {
    const auto& G = G_[static_cast<std::size_t>(c)];
    const auto& F = F_[static_cast<std::size_t>(c)];
    for (int k = 0; k <= g.nt; ++k) {
      for (int i = 1; i <= nx - 2; ++i) {
        const std::size_t s = BoundaryTrace::side_index(g, k, i, false);
        track(3.0 * W(c, k, 0, i) - 4.0 * W(c, k, 1, i) + W(c, k, 2, i) - 2.0 * g.hy * G.bottom[s]);
        track(3.0 * W(c, k, ny, i) - 4.0 * W(c, k, ny - 1, i) + W(c, k, ny - 2, i) -
              2.0 * g.hy * G.top[s]);
      }
      for (int j = 0; j <= ny; ++j) {
        const std::size_t s = BoundaryTrace::side_index(g, k, j, true);
        track(3.0 * W(c, k, j, 0) - 4.0 * W(c, k, j, 1) + W(c, k, j, 2) - 2.0 * g.hx * G.left[s]);
        track(W(c, k, j, nx) - F[s]);
        track(3.0 * W(c, k, j, nx) - 4.0 * W(c, k, j, nx - 1) + W(c, k, j, nx - 2) -
              2.0 * g.hx * G.right[s]);
      }
    }
  }
  return worst;
}

WField initial_guess(const ObservationSet& obs, const ConstraintSet& constraints) {
  const Grid& g = obs.grid;
  WField W(g);
  for (int c = 0; c < kWComponents; ++c)
    for (int k = 0; k <= g.nt; ++k)
      for (int j = 0; j <= g.ny; ++j) {
        const double f = obs.F(c, k, j);
        for (int i = 0; i <= g.nx; ++i) W(c, k, j, i) = (g.x(i) - g.a) / (g.b - g.a) * f;
      }
  return constraints.expand(constraints.eliminate(W));
}

void validate(const OptimizerConfig& config) {
  if (!(config.sigma > 0.0)) throw std::invalid_argument("optimizer: sigma must be > 0");
  if (!(config.grad_tol > 0.0)) throw std::invalid_argument("optimizer: grad_tol must be > 0");
  if (!(config.backtrack > 0.0 && config.backtrack < 1.0))
    throw std::invalid_argument("optimizer: backtrack must lie in (0, 1)");
  if (!(config.armijo > 0.0 && config.armijo < 1.0))
    throw std::invalid_argument("optimizer: armijo must lie in (0, 1)");
  if (config.max_iters < 0) throw std::invalid_argument("optimizer: max_iters must be >= 0");
  if (config.lbfgs_memory < 1) throw std::invalid_argument("optimizer: lbfgs_memory must be >= 1");
  if (!(config.gradient_scale > 0.0))
    throw std::invalid_argument("optimizer: gradient_scale must be > 0");
}

OptimizerMode parse_optimizer_mode(const std::string& s) {
  if (s == "gradient" || s == "gd" || s == "projected-gradient") return OptimizerMode::GradientDescent;
  if (s == "lbfgs" || s == "quasi-newton") return OptimizerMode::LBFGS;
  throw std::invalid_argument("optimizer: unknown mode '" + s + "'");
}

std::string to_string(OptimizerMode mode) {
  return mode == OptimizerMode::LBFGS ? "lbfgs" : "gradient";
}

std::string to_string(OptimizerStatus status) {
  switch (status) {
    case OptimizerStatus::Converged: return "converged";
    case OptimizerStatus::MaxIterations: return "max_iterations";
    case OptimizerStatus::LineSearchFailed: return "line_search_failed";
  }
  return "unknown";
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += a[n] * b[n];
  return s;
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

struct Pair {
  std::vector<double> s, y;
  double rho;
};

/// Two-loop recursion: d = -H g.
void lbfgs_direction(const std::deque<Pair>& mem, std::span<const double> g, std::vector<double>& d) {
  d.assign(g.begin(), g.end());
  std::vector<double> alpha(mem.size());
  for (std::size_t m = mem.size(); m-- > 0;) {
    alpha[m] = mem[m].rho * dot(mem[m].s, d);
    for (std::size_t n = 0; n < d.size(); ++n) d[n] -= alpha[m] * mem[m].y[n];
  }
  if (!mem.empty()) {
    const auto& last = mem.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& v : d) v *= gamma;
  }
  for (std::size_t m = 0; m < mem.size(); ++m) {
    const double beta = mem[m].rho * dot(mem[m].y, d);
    for (std::size_t n = 0; n < d.size(); ++n) d[n] += (alpha[m] - beta) * mem[m].s[n];
  }
  for (double& v : d) v = -v;
}

}  // namespace

OptimizeResult minimize(const Objective& objective, std::vector<double> z0,
                        const OptimizerConfig& config, const IterateHook& hook) {
  validate(config);
  OptimizeResult out;
  const std::size_t n = z0.size();
  std::vector<double> z = std::move(z0), grad(n), trial(n), trial_grad(n), dir(n);
  EvalResult cur = objective(z, grad);
  if (!std::isfinite(cur.value))
    throw NumericalError("optimizer: objective is not finite at the starting point");

  auto record = [&](int iter, double step) {
    TraceRow row{iter, cur.value, cur.fidelity, max_abs(grad) * config.gradient_scale, cur.norm, step, 0.0};
    if (hook) hook(z, row);
    out.trace.push_back(row);
    return row.grad_norm;
  };

  std::deque<Pair> mem;
  double step = config.sigma;
  double gnorm = record(0, 0.0);
  int iter = 0;
  out.status = OptimizerStatus::MaxIterations;
  while (true) {
    if (gnorm < config.grad_tol) {
      out.status = OptimizerStatus::Converged;
      break;
    }
    if (iter >= config.max_iters) break;

    bool quasi = config.mode == OptimizerMode::LBFGS && !mem.empty();
    if (quasi) {
      lbfgs_direction(mem, grad, dir);
      if (!(dot(dir, grad) < 0.0)) {
        mem.clear();
        quasi = false;
      }
    }
    if (!quasi)
      for (std::size_t m = 0; m < n; ++m) dir[m] = -grad[m];

    double t = quasi ? 1.0 : step;
    bool accepted = false;
    EvalResult next;
    const double slope = dot(grad, dir);
    for (int attempt = 0; attempt <= config.max_halvings; ++attempt) {
      for (std::size_t m = 0; m < n; ++m) trial[m] = z[m] + t * dir[m];
      next = objective(trial, trial_grad);
      if (std::isfinite(next.value) && next.value <= cur.value + config.armijo * t * slope) {
        accepted = true;
        break;
      }
      t *= config.backtrack;
    }
    if (!accepted) {
      if (quasi) {
        mem.clear();  // retry once along steepest descent
        continue;
      }
      out.status = OptimizerStatus::LineSearchFailed;
      break;
    }

    if (config.mode == OptimizerMode::LBFGS) {
      Pair p{std::vector<double>(n), std::vector<double>(n), 0.0};
      for (std::size_t m = 0; m < n; ++m) {
        p.s[m] = trial[m] - z[m];
        p.y[m] = trial_grad[m] - grad[m];
      }
      const double sy = dot(p.s, p.y);
      if (sy > 1e-12 * std::sqrt(dot(p.s, p.s) * dot(p.y, p.y)) && sy > 0.0) {
        p.rho = 1.0 / sy;
        mem.push_back(std::move(p));
        if (static_cast<int>(mem.size()) > config.lbfgs_memory) mem.pop_front();
      }
    }
    if (!quasi) step = t / config.backtrack;  // let the steepest-descent step grow back

    z.swap(trial);
    grad.swap(trial_grad);
    cur = next;
    ++iter;
    gnorm = record(iter, t);
  }
  out.iterations = iter;
  out.grad_norm = gnorm;
  out.z = std::move(z);
  return out;
}

double volume_gradient_scale(const Grid& g) { return 1.0 / (g.hx * g.hy * g.ht); }

InversionRun minimize_functional(const Functional& J, const ConstraintSet& constraints,
                                 const WField& W0, const OptimizerConfig& config) {
  WField gradW(J.grid());
  auto objective = [&](std::span<const double> z, std::span<double> grad) {
    const WField W = constraints.expand(z);
    const auto v = J.evaluate(W, gradW.values);
    const auto gz = constraints.expand_transpose(gradW);
    std::copy(gz.begin(), gz.end(), grad.begin());
    return EvalResult{v.total, v.fidelity, std::sqrt(J.squared_norm(W))};
  };
  auto hook = [&](std::span<const double> z, TraceRow& row) {
    row.constraint_residual = constraints.residual(constraints.expand(z));
  };
  InversionRun run;
  run.result = minimize(objective, constraints.eliminate(W0), config, hook);
  run.W = constraints.expand(run.result.z);
  return run;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << "iter,J,fidelity,grad_norm,W_norm,step,constraint_residual\n";
  os << std::setprecision(17);
  for (const auto& r : trace)
    os << r.iter << ',' << r.J << ',' << r.fidelity << ',' << r.grad_norm << ',' << r.W_norm << ','
       << r.step << ',' << r.constraint_residual << '\n';
}

}  // namespace sirinv
