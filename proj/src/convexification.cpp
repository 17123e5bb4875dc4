#include "sirinv/convexification.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sirinv {

namespace {

// Velocity index for each W component: (v1, w1) -> S, (v2, w2) -> I, (v3, w3) -> R.
constexpr std::array<int, 6> kVelocityOf{0, 1, 2, 0, 1, 2};

using Buffer = std::vector<double>;

}  // namespace

ScalarField WField::component_field(int c) const {
  ScalarField f(grid);
  const auto s = comp(c);
  std::copy(s.begin(), s.end(), f.values.begin());
  return f;
}

void WField::set_component(int c, const ScalarField& f) {
  if (f.values.size() != grid.size()) throw std::invalid_argument("WField: component shape mismatch");
  std::copy(f.values.begin(), f.values.end(), comp(c).begin());
}

bool WField::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

RegularizationNorm parse_regularization_norm(const std::string& s) {
  if (s == "differences") return RegularizationNorm::Differences;
  if (s == "derivatives") return RegularizationNorm::Derivatives;
  throw std::invalid_argument("carleman: unknown regularization norm '" + s + "'");
}

std::string to_string(RegularizationNorm norm) {
  return norm == RegularizationNorm::Differences ? "differences" : "derivatives";
}

bool xi_in_theory_window(const CarlemanParams& params, double T) {
  const double half = 0.5 * params.xi;
  return half >= std::exp(-params.lambda * T * T / 4.0) && half < 0.5;
}

void validate(const CarlemanParams& params, const Grid& grid) {
  if (!(params.lambda >= 0.0)) throw std::invalid_argument("carleman: lambda must be >= 0");
  if (!(params.xi >= 0.0)) throw std::invalid_argument("carleman: xi must be >= 0");
  if (params.lambda * params.b * params.b > 300.0)
    throw std::invalid_argument("carleman: lambda * b^2 > 300 overflows the weight");
  if (params.theory_mode && !xi_in_theory_window(params, grid.T)) {
    std::ostringstream msg;
    msg << "carleman: theory mode requires xi/2 in [exp(-lambda T^2/4), 1/2); got xi = "
        << params.xi << " for lambda = " << params.lambda;
    throw std::invalid_argument(msg.str());
  }
}

CarlemanWeight cwf_eval(const CarlemanParams& params, const Grid& g) {
  validate(params, g);
  CarlemanWeight w{ScalarField(g), ScalarField(g)};
  const double lam = params.lambda, b2 = params.b * params.b, mid = 0.5 * g.T;
  for (int k = 0; k <= g.nt; ++k) {
    const double dt = g.t(k) - mid;
    for (int j = 0; j <= g.ny; ++j)
      for (int i = 0; i <= g.nx; ++i) {
        const double x2 = g.x(i) * g.x(i);
        w.phi(k, j, i) = std::exp(2.0 * lam * (x2 - dt * dt));
        w.balanced(k, j, i) = std::exp(2.0 * lam * (x2 - b2) - 2.0 * lam * dt * dt);
      }
  }
  return w;
}

Functional::Functional(const ObservationSet& obs, const CarlemanParams& params)
    : obs_(obs),
      params_(params),
      grid_(obs.grid),
      ops_(obs.grid),
      shape_(FieldShape::of(obs.grid)),
      weights_(quadrature_weights(obs.grid)) {
  const auto cwf = cwf_eval(params, grid_);
  fidelity_weights_.resize(weights_.size());
  for (std::size_t n = 0; n < weights_.size(); ++n)
    fidelity_weights_[n] = weights_[n] * cwf.balanced.values[n];
}

void Functional::linear_part(std::span<const double> u, int comp, std::span<double> out) const {
  // u_t - c Lap u + d/dx(qx u) + d/dy(qy u)
  const auto& q = obs_.q[static_cast<std::size_t>(kVelocityOf[static_cast<std::size_t>(comp)])];
  const std::size_t ns = grid_.spatial_size(), nt1 = grid_.nodes_t();
  apply_axis(ops_.dt(), Axis::T, shape_, u, out);
  apply_axis(ops_.dxx(), Axis::X, shape_, u, out, -obs_.c, false, true);
  apply_axis(ops_.dyy(), Axis::Y, shape_, u, out, -obs_.c, false, true);
  Buffer fx(u.size()), fy(u.size());
  for (std::size_t k = 0; k < nt1; ++k)
    for (std::size_t s = 0; s < ns; ++s) {
      fx[k * ns + s] = q.qx.values[s] * u[k * ns + s];
      fy[k * ns + s] = q.qy.values[s] * u[k * ns + s];
    }
  apply_axis(ops_.dx(), Axis::X, shape_, fx, out, 1.0, false, true);
  apply_axis(ops_.dy(), Axis::Y, shape_, fy, out, 1.0, false, true);
}

void Functional::linear_part_transpose(std::span<const double> a, int comp,
                                       std::span<double> out) const {
  const auto& q = obs_.q[static_cast<std::size_t>(kVelocityOf[static_cast<std::size_t>(comp)])];
  const std::size_t ns = grid_.spatial_size(), nt1 = grid_.nodes_t();
  apply_axis(ops_.dt(), Axis::T, shape_, a, out, 1.0, true, true);
  apply_axis(ops_.dxx(), Axis::X, shape_, a, out, -obs_.c, true, true);
  apply_axis(ops_.dyy(), Axis::Y, shape_, a, out, -obs_.c, true, true);
  Buffer gx(a.size()), gy(a.size());
  apply_axis(ops_.dx(), Axis::X, shape_, a, gx, 1.0, true);
  apply_axis(ops_.dy(), Axis::Y, shape_, a, gy, 1.0, true);
  for (std::size_t k = 0; k < nt1; ++k)
    for (std::size_t s = 0; s < ns; ++s)
      out[k * ns + s] += q.qx.values[s] * gx[k * ns + s] + q.qy.values[s] * gy[k * ns + s];
}

namespace {

/// Pointwise quantities shared by the residual and its adjoint.
struct NonlinearState {
  Buffer Iv1, Iv2, Iw1, Iw3;
  Buffer rhoS, rhoI, beta, gamma, A, B;
};

NonlinearState nonlinear_state(const Grid& g, const ObservationSet& obs, const WField& W) {
  const std::size_t N = g.size(), ns = g.spatial_size();
  NonlinearState st;
  for (Buffer* b : {&st.Iv1, &st.Iv2, &st.Iw1, &st.Iw3, &st.rhoS, &st.rhoI, &st.beta, &st.gamma,
                    &st.A, &st.B})
    b->resize(N);
  volterra_apply(g, W.comp(0), st.Iv1);
  volterra_apply(g, W.comp(1), st.Iv2);
  volterra_apply(g, W.comp(3), st.Iw1);
  volterra_apply(g, W.comp(5), st.Iw3);
  const auto v1 = W.comp(0), v2 = W.comp(1), v3 = W.comp(2), w1 = W.comp(3), w2 = W.comp(4);
  for (std::size_t n = 0; n < N; ++n) {
    const std::size_t s = n % ns;
    st.rhoS[n] = st.Iv1[n] + obs.p[0].values[s];
    st.rhoI[n] = st.Iv2[n] + obs.p[1].values[s];
    st.beta[n] = (v1[n] - st.Iw1[n]) * obs.r[0].values[s] + obs.r[1].values[s];
    st.gamma[n] = (v3[n] - st.Iw3[n]) * obs.r[2].values[s] + obs.r[3].values[s];
    st.A[n] = v1[n] * st.rhoI[n] + st.rhoS[n] * v2[n];
    st.B[n] = w1[n] * st.rhoI[n] + 2.0 * v1[n] * v2[n] + st.rhoS[n] * w2[n];
  }
  return st;
}

}  // namespace

std::array<ScalarField, 6> assemble_P(const WField& W, const ObservationSet& obs) {
  const Grid& g = W.grid;
  const auto st = nonlinear_state(g, obs, W);
  std::array<ScalarField, 6> P;
  for (int c = 0; c < 6; ++c) {
    const auto& q = obs.q[static_cast<std::size_t>(kVelocityOf[static_cast<std::size_t>(c)])];
    P[static_cast<std::size_t>(c)] = divergence_of_product(W.component_field(c), q);
    for (auto& v : P[static_cast<std::size_t>(c)].values) v = -v;
  }
  const auto v2 = W.comp(1), w2 = W.comp(4);
  for (std::size_t n = 0; n < g.size(); ++n) {
    P[0].values[n] -= st.beta[n] * st.A[n];
    P[1].values[n] += st.beta[n] * st.A[n];
    P[2].values[n] += st.gamma[n] * v2[n];
    P[3].values[n] -= st.beta[n] * st.B[n];
    P[4].values[n] += st.beta[n] * st.B[n];
    P[5].values[n] += st.gamma[n] * w2[n];
  }
  return P;
}

std::array<ScalarField, 6> Functional::residual(const WField& W) const {
  if (!(W.grid == grid_)) throw std::invalid_argument("functional: W and observations differ in grid");
  const auto st = nonlinear_state(grid_, obs_, W);
  std::array<ScalarField, 6> L;
  for (int c = 0; c < 6; ++c) {
    L[static_cast<std::size_t>(c)] = ScalarField(grid_);
    linear_part(W.comp(c), c, L[static_cast<std::size_t>(c)].values);
  }
  const auto v2 = W.comp(1), w2 = W.comp(4);
  for (std::size_t n = 0; n < grid_.size(); ++n) {
    L[0].values[n] += st.beta[n] * st.A[n];
    L[1].values[n] -= st.beta[n] * st.A[n];
    L[2].values[n] -= st.gamma[n] * v2[n];
    L[3].values[n] += st.beta[n] * st.B[n];
    L[4].values[n] -= st.beta[n] * st.B[n];
    L[5].values[n] -= st.gamma[n] * w2[n];
  }
  return L;
}

double Functional::regularization(const WField& W, std::span<double> grad, double scale) const {
  // Each term: sum_n w_n (D u)_n^2, gradient 2 D^T (w . D u).
  const std::size_t N = grid_.size();
  Buffer du(N), tmp(N), back(N);
  double total = 0.0;
  const bool want_grad = !grad.empty();
  for (int c = 0; c < 6; ++c) {
    const auto u = W.comp(c);
    std::span<double> gc = want_grad ? grad.subspan(static_cast<std::size_t>(c) * N, N) : std::span<double>{};

    auto accumulate_term = [&](std::span<const double> d, double factor, auto&& adjoint) {
      double sum = 0.0;
      for (std::size_t n = 0; n < N; ++n) sum += weights_[n] * d[n] * d[n];
      total += factor * sum;
      if (!want_grad) return;
      for (std::size_t n = 0; n < N; ++n) tmp[n] = 2.0 * factor * scale * weights_[n] * d[n];
      adjoint(tmp, gc);
    };

    accumulate_term(u, 1.0, [&](const Buffer& a, std::span<double> out) {
      for (std::size_t n = 0; n < N; ++n) out[n] += a[n];
    });
    // Undivided differences carry one power of the step per derivative order.
    const bool undivided = params_.norm == RegularizationNorm::Differences;
    const double hx = undivided ? grid_.hx : 1.0, hy = undivided ? grid_.hy : 1.0,
                 ht = undivided ? grid_.ht : 1.0;
    struct Single {
      const Stencil1D* op;
      Axis axis;
      double factor;
    };
    for (const Single& d : {Single{&ops_.dx(), Axis::X, hx * hx}, Single{&ops_.dy(), Axis::Y, hy * hy},
                            Single{&ops_.dt(), Axis::T, ht * ht},
                            Single{&ops_.dxx(), Axis::X, hx * hx * hx * hx},
                            Single{&ops_.dyy(), Axis::Y, hy * hy * hy * hy}}) {
      apply_axis(*d.op, d.axis, shape_, u, du);
      accumulate_term(du, d.factor, [&](const Buffer& a, std::span<double> out) {
        apply_axis(*d.op, d.axis, shape_, a, out, 1.0, true, true);
      });
    }
    // Mixed derivative D_x D_y, counted twice as in the Hessian norm.
    apply_axis(ops_.dy(), Axis::Y, shape_, u, back);
    apply_axis(ops_.dx(), Axis::X, shape_, back, du);
    accumulate_term(du, 2.0 * hx * hx * hy * hy, [&](const Buffer& a, std::span<double> out) {
      apply_axis(ops_.dx(), Axis::X, shape_, a, back, 1.0, true);
      apply_axis(ops_.dy(), Axis::Y, shape_, back, out, 1.0, true, true);
    });
  }
  return total;
}

double Functional::squared_norm(const WField& W) const { return regularization(W, {}, 1.0); }

FunctionalValue Functional::evaluate(const WField& W) const {
  const auto L = residual(W);
  FunctionalValue v;
  for (std::size_t n = 0; n < grid_.size(); ++n) {
    double s = 0.0;
    for (const auto& f : L) s += f.values[n] * f.values[n];
    v.fidelity += fidelity_weights_[n] * s;
  }
  v.regularization = params_.xi > 0.0 ? params_.xi * squared_norm(W) : 0.0;
  v.total = v.fidelity + v.regularization;
  return v;
}

FunctionalValue Functional::evaluate(const WField& W, std::span<double> grad) const {
  const std::size_t N = grid_.size();
  if (grad.size() != kWComponents * N) throw std::invalid_argument("functional: gradient size");
  std::fill(grad.begin(), grad.end(), 0.0);

  const auto st = nonlinear_state(grid_, obs_, W);
  std::array<Buffer, 6> L;
  for (int c = 0; c < 6; ++c) {
    L[static_cast<std::size_t>(c)].resize(N);
    linear_part(W.comp(c), c, L[static_cast<std::size_t>(c)]);
  }
  const auto v1 = W.comp(0), v2 = W.comp(1), w1 = W.comp(3), w2 = W.comp(4);
  for (std::size_t n = 0; n < N; ++n) {
    L[0][n] += st.beta[n] * st.A[n];
    L[1][n] -= st.beta[n] * st.A[n];
    L[2][n] -= st.gamma[n] * v2[n];
    L[3][n] += st.beta[n] * st.B[n];
    L[4][n] -= st.beta[n] * st.B[n];
    L[5][n] -= st.gamma[n] * w2[n];
  }

  FunctionalValue v;
  std::array<Buffer, 6> adj;
  for (auto& a : adj) a.resize(N);
  for (std::size_t n = 0; n < N; ++n) {
    double s = 0.0;
    for (int c = 0; c < 6; ++c) {
      const double l = L[static_cast<std::size_t>(c)][n];
      s += l * l;
      adj[static_cast<std::size_t>(c)][n] = 2.0 * fidelity_weights_[n] * l;
    }
    v.fidelity += fidelity_weights_[n] * s;
  }

  auto gcomp = [&](int c) { return grad.subspan(static_cast<std::size_t>(c) * N, N); };
  for (int c = 0; c < 6; ++c) linear_part_transpose(adj[static_cast<std::size_t>(c)], c, gcomp(c));

  // Reverse sweep through the pointwise nonlinearity.
  Buffer g_Iv1(N), g_Iv2(N), g_Iw1(N), g_Iw3(N);
  auto gv1 = gcomp(0), gv2 = gcomp(1), gv3 = gcomp(2), gw1 = gcomp(3), gw2 = gcomp(4);
  const std::size_t ns = grid_.spatial_size();
  for (std::size_t n = 0; n < N; ++n) {
    const std::size_t s = n % ns;
    const double a_ab = adj[0][n] - adj[1][n];
    const double a_bb = adj[3][n] - adj[4][n];
    const double g_beta = a_ab * st.A[n] + a_bb * st.B[n];
    const double g_gamma = -adj[2][n] * v2[n] - adj[5][n] * w2[n];
    const double gA = a_ab * st.beta[n];
    const double gB = a_bb * st.beta[n];

    gv2[n] -= adj[2][n] * st.gamma[n];
    gw2[n] -= adj[5][n] * st.gamma[n];

    gv1[n] += gA * st.rhoI[n] + 2.0 * gB * v2[n];
    gv2[n] += gA * st.rhoS[n] + 2.0 * gB * v1[n];
    gw1[n] += gB * st.rhoI[n];
    gw2[n] += gB * st.rhoS[n];
    const double g_rhoI = gA * v1[n] + gB * w1[n];
    const double g_rhoS = gA * v2[n] + gB * w2[n];

    const double r1 = obs_.r[0].values[s], r3 = obs_.r[2].values[s];
    gv1[n] += g_beta * r1;
    g_Iw1[n] = -g_beta * r1;
    gv3[n] += g_gamma * r3;
    g_Iw3[n] = -g_gamma * r3;
    g_Iv1[n] = g_rhoS;
    g_Iv2[n] = g_rhoI;
  }
  volterra_apply_transpose(grid_, g_Iv1, gcomp(0), true);
  volterra_apply_transpose(grid_, g_Iv2, gcomp(1), true);
  volterra_apply_transpose(grid_, g_Iw1, gcomp(3), true);
  volterra_apply_transpose(grid_, g_Iw3, gcomp(5), true);

  v.regularization = params_.xi > 0.0 ? params_.xi * regularization(W, grad, params_.xi) : 0.0;
  // regularization() adds xi * d||W||^2 to grad and returns ||W||^2.
  v.total = v.fidelity + v.regularization;
  return v;
}

double functional_J(const WField& W, const CarlemanParams& params, const ObservationSet& obs) {
  return Functional(obs, params).evaluate(W).total;
}

WField gradient_J(const WField& W, const CarlemanParams& params, const ObservationSet& obs) {
  WField g(W.grid);
  Functional(obs, params).evaluate(W, g.values);
  return g;
}

WField w_from_populations(const ScalarField& rho_S, const ScalarField& rho_I,
                          const ScalarField& rho_R) {
  const Grid& g = rho_S.grid;
  WField W(g);
  const auto shape = FieldShape::of(g);
  const auto dt = Stencil1D::first_derivative(g.nt + 1, g.ht);
  const bool wide = g.nt + 1 >= 4;
  const auto dtt = wide ? Stencil1D::second_derivative(g.nt + 1, g.ht) : dt;
  const std::array<const ScalarField*, 3> rho{&rho_S, &rho_I, &rho_R};
  for (int c = 0; c < 3; ++c) {
    apply_axis(dt, Axis::T, shape, rho[static_cast<std::size_t>(c)]->values, W.comp(c));
    if (wide) {
      apply_axis(dtt, Axis::T, shape, rho[static_cast<std::size_t>(c)]->values, W.comp(c + 3));
    } else {
      apply_axis(dt, Axis::T, shape, W.comp(c), W.comp(c + 3));
    }
  }
  return W;
}

double weighted_l2(const std::array<ScalarField, 6>& fields) {
  const auto w = quadrature_weights(fields[0].grid);
  double s = 0.0;
  for (const auto& f : fields)
    for (std::size_t n = 0; n < w.size(); ++n) s += w[n] * f.values[n] * f.values[n];
  return std::sqrt(s);
}

}  // namespace sirinv
