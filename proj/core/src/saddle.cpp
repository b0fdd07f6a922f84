// Copyright 2026 The dmft Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dmft/saddle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dmft/error.hpp"
#include "dmft/gp_sample.hpp"
#include "dmft/parallel.hpp"
#include "dmft/static_kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dmft {

void set_thread_count(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void DmftConfig::validate() const {
  require(depth >= 1, ErrorKind::InvalidConfig, "depth must be >= 1");
  require(gamma0 >= 0 && std::isfinite(gamma0), ErrorKind::InvalidConfig, "gamma0 must be >= 0");
  require(n_mc >= 2, ErrorKind::InsufficientSamples, "n_mc must be >= 2");
  require(beta > 0 && beta <= 1, ErrorKind::InvalidConfig, "beta must lie in (0, 1]");
  require(tol > 0, ErrorKind::InvalidConfig, "tol must be > 0");
  require(max_iters >= 1, ErrorKind::InvalidConfig, "max_iters must be >= 1");
  require(lambda_wd >= 0, ErrorKind::InvalidConfig, "lambda_wd must be >= 0");
  require(batch_size >= 1, ErrorKind::InvalidConfig, "batch_size must be >= 1");
  require(time_segments >= 1, ErrorKind::InvalidConfig, "time_segments must be >= 1");
  if (lambda_wd > 0) {
    require(homogeneity_degree(activation) == 1 && !use_bias, ErrorKind::InvalidConfig,
            "weight decay needs a homogeneous network (linear or relu, no bias)");
  }
}

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Fields for a batch of B samples, one column per sample, time-major rows.
struct BatchFields {
  Eigen::MatrixXd h, z, g, phi;
  Eigen::MatrixXd d1;  // phi'(h)
  Eigen::MatrixXd d2;  // phi''(h) z
};

void solve_batch(const LayerCoupling& c, const Eigen::MatrixXd& U, const Eigen::MatrixXd& R,
                 Activation act, BatchFields& f) {
  const int P = c.n_samples, T = c.n_steps, n = c.dim();
  const Eigen::Index B = U.cols();
  f.h.resize(n, B);
  f.z.resize(n, B);
  f.g.resize(n, B);
  f.phi.resize(n, B);
  f.d1.resize(n, B);
  f.d2.resize(n, B);
  for (int k = 0; k < T; ++k) {
    const int r0 = k * P;
    auto hk = f.h.middleRows(r0, P);
    hk = c.scale[k] * U.middleRows(r0, P);
    if (k > 0) hk.noalias() += c.mh.block(r0, 0, P, r0) * f.g.topRows(r0);
    if (!hk.allFinite())
      fail(ErrorKind::NonFiniteValue, "preactivation field diverged at step " + std::to_string(k));
    const Eigen::ArrayXXd ha = hk.array();
    f.phi.middleRows(r0, P) = apply_phi(act, ha).matrix();
    f.d1.middleRows(r0, P) = apply_dphi(act, ha).matrix();
    auto zk = f.z.middleRows(r0, P);
    zk = c.scale[k] * R.middleRows(r0, P);
    zk.noalias() += c.mz.block(r0, 0, P, r0 + P) * f.phi.topRows(r0 + P);
    if (!zk.allFinite())
      fail(ErrorKind::NonFiniteValue, "gradient field diverged at step " + std::to_string(k));
    f.g.middleRows(r0, P) = f.d1.middleRows(r0, P).cwiseProduct(zk);
    f.d2.middleRows(r0, P) = (apply_ddphi(act, ha) * zk.array()).matrix();
  }
}

enum class Direction { r, u };

// Sensitivities for a batch. Column (c, b) of every matrix sits at c * B + b,
// so "columns with c < m" is a leading block and causal products stay narrow.
struct BatchJacobian {
  RowMat wphi;  // d phi(h) / d source
  RowMat wg;    // d g / d source
  RowMat jh, jz;  // raw dh, dz (only when requested)
  RowMat sh, sz;  // per-step scratch
};

using RowBlock = Eigen::Ref<RowMat, 0, Eigen::OuterStride<>>;

// Scales row i of m (laid out as B x m.cols()/B per row) by coef(row0 + i, b).
void scale_rows(RowBlock m, const Eigen::MatrixXd& coef, int row0) {
  const Eigen::Index B = coef.cols();
  const Eigen::Index groups = m.cols() / B;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Map<Eigen::MatrixXd> v(m.row(i).data(), B, groups);
    v.array().colwise() *= coef.row(row0 + i).transpose().array();
  }
}

// Adds the unit source of step k for the columns [c0, c0 + m.cols()).
void add_source(RowBlock m, int P, int k, Eigen::Index B, Eigen::Index c0, double s) {
  for (int mu = 0; mu < P; ++mu)
    for (Eigen::Index b = 0; b < B; ++b) {
      const Eigen::Index col = (static_cast<Eigen::Index>(k) * P + mu) * B + b - c0;
      if (col >= 0 && col < m.cols()) m(mu, col) += s;
    }
}

void jacobian_batch(const LayerCoupling& c, const BatchFields& f, Direction dir, bool keep_raw,
                    BatchJacobian& out) {
  const int P = c.n_samples, T = c.n_steps, n = c.dim();
  const Eigen::Index B = f.h.cols(), total = static_cast<Eigen::Index>(n) * B;
  out.wphi.setZero(n, total);
  out.wg.setZero(n, total);
  if (keep_raw) {
    out.jh.setZero(n, total);
    out.jz.setZero(n, total);
  }
  // Columns are independent recursions. They are swept in chunks whose history
  // (two n x width blocks) stays in cache; a chunk starts at the first step its
  // sources reach, since earlier rows are zero.
  const Eigen::Index width = B * std::max<Eigen::Index>(1, (1 << 16) / (static_cast<Eigen::Index>(n) * B));
  out.sh.resize(P, width);
  out.sz.resize(P, width);
  for (Eigen::Index c0 = 0; c0 < total; c0 += width) {
    const int k0 = static_cast<int>(c0 / B) / P;
    const int rs = k0 * P;
    for (int k = k0; k < T; ++k) {
      const int r0 = k * P;
      const Eigen::Index w = std::min(c0 + width, static_cast<Eigen::Index>(r0 + P) * B) - c0;
      if (w <= 0) continue;
      auto jh = out.sh.leftCols(w);
      auto jz = out.sz.leftCols(w);
      if (k > k0)
        jh.noalias() = c.mh.block(r0, rs, P, r0 - rs) * out.wg.block(rs, c0, r0 - rs, w);
      else
        jh.setZero();
      if (dir == Direction::u) add_source(jh, P, k, B, c0, c.scale[k]);

      auto wphi = out.wphi.block(r0, c0, P, w);
      wphi = jh;
      scale_rows(wphi, f.d1, r0);

      jz.noalias() = c.mz.block(r0, rs, P, r0 + P - rs) * out.wphi.block(rs, c0, r0 + P - rs, w);
      if (dir == Direction::r) add_source(jz, P, k, B, c0, c.scale[k]);

      if (keep_raw) {
        out.jh.block(r0, c0, P, w) = jh;
        out.jz.block(r0, c0, P, w) = jz;
      }
      scale_rows(jh, f.d2, r0);
      scale_rows(jz, f.d1, r0);
      auto wg = out.wg.block(r0, c0, P, w);
      wg = jh + jz;
      if (!wg.allFinite())
        fail(ErrorKind::NonFiniteValue, "sensitivities diverged at step " + std::to_string(k));
    }
  }
}

// Column b of an interleaved batch matrix as a plain n x n matrix.
Eigen::MatrixXd extract_sample(const RowMat& m, Eigen::Index B, Eigen::Index b) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < n; ++c) out(i, c) = m(i, c * B + b);
  return out;
}

// Running sums in time-major order; phi/g only hold their lower triangle until finalize().
struct Accumulator {
  Eigen::MatrixXd phi, g, a, b;
  bool want_a = false, want_b = false;

  Accumulator(int n, bool wa, bool wb) : want_a(wa), want_b(wb) {
    phi.setZero(n, n);
    g.setZero(n, n);
    if (wa) a.setZero(n, n);
    if (wb) b.setZero(n, n);
  }

  static void add_summed(Eigen::MatrixXd& acc, const RowMat& w, Eigen::Index B) {
    const Eigen::Index n = w.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Map<const Eigen::MatrixXd> v(w.row(i).data(), B, n);
      acc.row(i) += v.colwise().sum();
    }
  }

  void add(const BatchFields& f, const BatchJacobian* jr, const BatchJacobian* ju) {
    phi.selfadjointView<Eigen::Lower>().rankUpdate(f.phi);
    g.selfadjointView<Eigen::Lower>().rankUpdate(f.g);
    const Eigen::Index B = f.h.cols();
    if (want_a) add_summed(a, jr->wphi, B);
    if (want_b) add_summed(b, ju->wg, B);
  }

  void merge(const Accumulator& o) {
    phi += o.phi;
    g += o.g;
    if (want_a) a += o.a;
    if (want_b) b += o.b;
  }

  void finalize() {
    phi.triangularView<Eigen::StrictlyUpper>() = phi.transpose();
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  }
};

Trajectory column_trajectory(const Eigen::MatrixXd& m, Eigen::Index col, int P,
                             const TimeGrid& grid) {
  Eigen::Map<const Eigen::MatrixXd> v(m.col(col).data(), P, grid.n_steps());
  return Trajectory(Eigen::MatrixXd(v), grid);
}

Eigen::MatrixXd trajectories_to_batch(const Trajectory& t) {
  // (mu, k) -> row k * P + mu
  Eigen::MatrixXd out(t.values().size(), 1);
  Eigen::Map<Eigen::MatrixXd>(out.data(), t.n_samples(), t.grid().n_steps()) = t.values();
  return out;
}

Eigen::MatrixXd with_bias(const Kernel& k, bool bias) {
  Eigen::MatrixXd v = k.values();
  if (bias) v.array() += 1.0;
  return v;
}

FieldSample sample_from_batch(const BatchFields& f, const Eigen::MatrixXd& U,
                              const Eigen::MatrixXd& R, Eigen::Index b, int P,
                              const TimeGrid& grid) {
  return {column_trajectory(U, b, P, grid),     column_trajectory(R, b, P, grid),
          column_trajectory(f.h, b, P, grid),   column_trajectory(f.z, b, P, grid),
          column_trajectory(f.g, b, P, grid),   column_trajectory(f.phi, b, P, grid)};
}

FieldSensitivities sensitivities_from_batch(const BatchJacobian& jr, const BatchJacobian& ju,
                                            Eigen::Index B, Eigen::Index b, int P, int T) {
  auto sm = [&](const RowMat& m) { return to_sample_major(extract_sample(m, B, b), P, P, T); };
  return {sm(jr.jh), sm(jr.jz), sm(ju.jh), sm(ju.jz), sm(jr.wphi), sm(ju.wg)};
}

}  // namespace

LayerCoupling make_layer_coupling(const Kernel& phi_prev, const Kernel& g_next,
                                  const Kernel& a_prev, const Kernel& b_this,
                                  const Trajectory& delta, const DmftConfig& cfg) {
  const int P = phi_prev.n_row_samples();
  const TimeGrid& grid = phi_prev.grid();
  const int T = grid.n_steps();
  for (const Kernel* k : {&g_next, &a_prev, &b_this})
    require(k->values().rows() == phi_prev.values().rows() &&
                k->values().cols() == phi_prev.values().cols() && k->grid() == grid,
            ErrorKind::ShapeMismatch, "layer kernels live on different index spaces");
  require(delta.grid() == grid && delta.n_samples() <= P, ErrorKind::ShapeMismatch,
          "error trajectory does not match the kernels");

  const Eigen::MatrixXd phi_t = to_time_major(with_bias(phi_prev, cfg.use_bias), P, P, T);
  const Eigen::MatrixXd g_t = to_time_major(g_next.values(), P, P, T);
  const Eigen::MatrixXd a_t = to_time_major(a_prev.values(), P, P, T);
  const Eigen::MatrixXd b_t = to_time_major(b_this.values(), P, P, T);

  LayerCoupling c;
  c.n_samples = P;
  c.n_steps = T;
  c.gamma0 = cfg.gamma0;
  c.dt = grid.dt();
  const int n = P * T;
  c.mh.setZero(n, n);
  c.mz.setZero(n, n);
  c.scale.resize(T);
  const double lam = cfg.lambda_wd, dt = grid.dt(), w = cfg.gamma0 * dt;
  for (int k = 0; k < T; ++k) c.scale[k] = std::exp(-lam * grid.time(k));

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(P, T);
  d.topRows(delta.n_samples()) = delta.values();

  for (int k = 0; k < T; ++k) {
    for (int j = 0; j <= k; ++j) {
      const double decay = std::exp(-lam * dt * (k - j));
      auto bz = c.mz.block(k * P, j * P, P, P);
      bz = (w * c.scale[k]) * b_t.block(k * P, j * P, P, P);
      if (j == k) continue;
      const Eigen::VectorXd dj = d.col(j);
      auto bh = c.mh.block(k * P, j * P, P, P);
      bh = (w * c.scale[k]) * a_t.block(k * P, j * P, P, P);
      bh += (w * decay) * phi_t.block(k * P, j * P, P, P) * dj.asDiagonal();
      bz += (w * decay) * g_t.block(k * P, j * P, P, P) * dj.asDiagonal();
    }
  }
  return c;
}

FieldSample solve_fields(const LayerCoupling& c, const Trajectory& u, const Trajectory& r,
                         Activation act) {
  require(u.n_samples() == c.n_samples && r.n_samples() == c.n_samples &&
              u.grid().n_steps() == c.n_steps && r.grid().n_steps() == c.n_steps,
          ErrorKind::ShapeMismatch, "source trajectories do not match the coupling");
  BatchFields f;
  const Eigen::MatrixXd U = trajectories_to_batch(u), R = trajectories_to_batch(r);
  solve_batch(c, U, R, act, f);
  return sample_from_batch(f, U, R, 0, c.n_samples, u.grid());
}

FieldSample solve_fields(const Trajectory& u, const Trajectory& r, const Kernel& phi_prev,
                         const Kernel& g_next, const Kernel& a_prev, const Kernel& b_this,
                         const Trajectory& delta, const DmftConfig& cfg) {
  return solve_fields(make_layer_coupling(phi_prev, g_next, a_prev, b_this, delta, cfg), u, r,
                      cfg.activation);
}

FieldSensitivities propagate_jacobians(const LayerCoupling& c, const FieldSample& s,
                                       Activation act) {
  BatchFields f;
  f.h = trajectories_to_batch(s.h);
  f.z = trajectories_to_batch(s.z);
  f.g = trajectories_to_batch(s.g);
  f.phi = trajectories_to_batch(s.phi);
  const Eigen::ArrayXXd ha = f.h.array();
  f.d1 = apply_dphi(act, ha).matrix();
  f.d2 = (apply_ddphi(act, ha) * f.z.array()).matrix();
  BatchJacobian jr, ju;
  jacobian_batch(c, f, Direction::r, true, jr);
  jacobian_batch(c, f, Direction::u, true, ju);
  return sensitivities_from_batch(jr, ju, 1, 0, c.n_samples, c.n_steps);
}

KernelEstimate estimate_kernels(const std::vector<FieldSample>& samples,
                                const std::vector<FieldSensitivities>& sens, double gamma0) {
  require(samples.size() >= 2, ErrorKind::InsufficientSamples,
          "need at least 2 samples, got " + std::to_string(samples.size()));
  require(sens.empty() || sens.size() == samples.size(), ErrorKind::ShapeMismatch,
          "one sensitivity record per sample expected");
  const TimeGrid grid = samples.front().h.grid();
  const int P = samples.front().h.n_samples();
  const int n = P * grid.n_steps();
  const double S = static_cast<double>(samples.size());
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, n), g = Eigen::MatrixXd::Zero(n, n);
  for (const auto& s : samples) {
    const Eigen::VectorXd p = s.phi.flatten(), q = s.g.flatten();
    phi.noalias() += p * p.transpose();
    g.noalias() += q * q.transpose();
  }
  phi /= S;
  g /= S;
  KernelEstimate est{Kernel(phi, iota_set(P), iota_set(P), grid, "phi"),
                     Kernel(g, iota_set(P), iota_set(P), grid, "g"), std::nullopt, std::nullopt};
  est.phi.symmetrize();
  est.g.symmetrize();
  if (sens.empty()) return est;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n), b = Eigen::MatrixXd::Zero(n, n);
  if (gamma0 >= 1e-8) {
    for (const auto& s : sens) {
      a += s.dphi_dr;
      b += s.dg_du;
    }
    const double norm = 1.0 / (gamma0 * grid.dt() * S);
    a *= norm;
    b *= norm;
  }
  est.a = Kernel(std::move(a), iota_set(P), iota_set(P), grid, "a");
  est.b = Kernel(std::move(b), iota_set(P), iota_set(P), grid, "b");
  return est;
}

std::vector<Eigen::MatrixXd> DmftState::ntk_diagonal() const {
  const int L = depth();
  std::vector<Kernel> phis(phi.begin() + 1, phi.begin() + 1 + L);
  std::vector<Kernel> gs(g.begin() + 1, g.begin() + 1 + L);
  return ntk_equal_time(phis, gs, kx, config.use_bias);
}

Kernel DmftState::ntk() const {
  const int L = depth();
  std::vector<Kernel> phis(phi.begin() + 1, phi.begin() + 1 + L);
  std::vector<Kernel> gs(g.begin() + 1, g.begin() + 1 + L);
  return ntk_assemble(phis, gs, kx, config.use_bias);
}

DmftSolver::DmftSolver(DmftConfig cfg, const SampleSet& data, const TimeGrid& grid)
    : state_{cfg, grid, data.input_gram(), {}, {}, {}, {},
             Trajectory(data.n_total(), grid), Trajectory(data.n_train(), grid),
             Eigen::VectorXd::Zero(grid.n_steps()), 0, false, {}},
      data_(data) {
  cfg.validate();
  const int L = cfg.depth;
  const int P = data.n_total();
  const StaticKernels sk =
      static_kernels(cfg.activation, data.input_gram(), L, cfg.n_quad, cfg.use_bias);
  auto& st = state_;
  for (int l = 0; l <= L; ++l)
    st.phi.push_back(Kernel::constant_in_time(sk.phi[l], grid, "phi" + std::to_string(l)));
  st.g.push_back(Kernel::zeros(P, grid, "g0"));
  for (int l = 1; l <= L + 1; ++l)
    st.g.push_back(Kernel::constant_in_time(sk.g[l], grid, "g" + std::to_string(l)));
  for (int l = 0; l <= L; ++l) {
    st.a.push_back(Kernel::zeros(P, grid, "a" + std::to_string(l)));
    st.b.push_back(Kernel::zeros(P, grid, "b" + std::to_string(l)));
  }
  refresh_predictions();
}

namespace {

Kernel extend_in_time(const Kernel& k, const TimeGrid& grid) {
  const int P = k.n_row_samples(), Tp = k.grid().n_steps(), T = grid.n_steps();
  require(k.n_col_samples() == P && Tp <= T && k.grid().dt() == grid.dt(), ErrorKind::ShapeMismatch,
          "warm start needs a prefix of the same grid");
  Eigen::MatrixXd v(P * T, P * T);
  for (int mu = 0; mu < P; ++mu)
    for (int t = 0; t < T; ++t)
      for (int a = 0; a < P; ++a)
        for (int s = 0; s < T; ++s)
          v(mu * T + t, a * T + s) = k.values()(mu * Tp + std::min(t, Tp - 1), a * Tp + std::min(s, Tp - 1));
  return Kernel(std::move(v), iota_set(P), iota_set(P), grid, k.name());
}

}  // namespace

void DmftSolver::warm_start(const DmftState& prefix) {
  auto& st = state_;
  require(prefix.depth() == st.depth() && prefix.kx.rows() == st.kx.rows(), ErrorKind::ShapeMismatch,
          "warm start from a different problem");
  const int L = st.depth();
  for (int l = 1; l <= L; ++l) {
    st.phi[l] = extend_in_time(prefix.phi[l], st.grid);
    st.g[l] = extend_in_time(prefix.g[l], st.grid);
  }
  for (int l = 0; l <= L; ++l) {
    st.a[l] = extend_in_time(prefix.a[l], st.grid);
    st.b[l] = extend_in_time(prefix.b[l], st.grid);
  }
  refresh_predictions();
}

void DmftSolver::refresh_predictions() {
  auto& st = state_;
  Predictions p = integrate_predictions(st.ntk_diagonal(), data_.targets(), data_.n_train(),
                                        st.config.loss, st.grid, st.config.prediction_decay());
  st.f = std::move(p.f);
  st.delta = std::move(p.delta);
  st.loss = std::move(p.loss);
}

DmftSolver::LayerEstimate DmftSolver::estimate_layer(int l, bool keep_samples) const {
  const auto& st = state_;
  const auto& cfg = st.config;
  const int L = cfg.depth;
  require(l >= 1 && l <= L, ErrorKind::InvalidConfig, "layer index out of range");
  const TimeGrid& grid = st.grid;
  const int P = data_.n_total(), T = grid.n_steps(), n = P * T;
  const double dt = grid.dt();

  const LayerCoupling c =
      make_layer_coupling(st.phi[l - 1], st.g[l + 1], st.a[l - 1], st.b[l], st.delta, cfg);
  const bool jac = !cfg.gradient_independence && !cfg.lazy();
  const bool want_a = jac && l < L;
  const bool want_b = jac && l > 1;
  const Eigen::MatrixXd cov_u = to_time_major(with_bias(st.phi[l - 1], cfg.use_bias), P, P, T);
  const Eigen::MatrixXd cov_r = to_time_major(st.g[l + 1].values(), P, P, T);

  auto to_kernel = [&](const Eigen::MatrixXd& tm, const char* name) {
    return Kernel(to_sample_major(tm, P, P, T), iota_set(P), iota_set(P), grid,
                  std::string(name) + std::to_string(l));
  };

  LayerEstimate out{KernelEstimate{Kernel::zeros(P, grid), Kernel::zeros(P, grid), {}, {}}, {}, {}};

  if (cfg.analytic_moments()) {
    // Fields are linear in (u, r): moments follow from the deterministic Jacobians.
    BatchFields f;
    solve_batch(c, Eigen::MatrixXd::Zero(n, 1), Eigen::MatrixXd::Zero(n, 1), cfg.activation, f);
    BatchJacobian jr, ju;
    jacobian_batch(c, f, Direction::r, false, jr);
    jacobian_batch(c, f, Direction::u, false, ju);
    Eigen::MatrixXd phi = ju.wphi * cov_u * ju.wphi.transpose();
    phi.noalias() += jr.wphi * cov_r * jr.wphi.transpose();
    Eigen::MatrixXd g = ju.wg * cov_u * ju.wg.transpose();
    g.noalias() += jr.wg * cov_r * jr.wg.transpose();
    out.estimate.phi = to_kernel(phi, "phi");
    out.estimate.g = to_kernel(g, "g");
    out.estimate.phi.symmetrize();
    out.estimate.g.symmetrize();
    const double norm = 1.0 / (cfg.gamma0 * dt);
    if (want_a) out.estimate.a = to_kernel(Eigen::MatrixXd(jr.wphi) * norm, "a");
    if (want_b) out.estimate.b = to_kernel(Eigen::MatrixXd(ju.wg) * norm, "b");
    return out;
  }

  const GaussianSampler su(cov_u), sr(cov_r);
  const int S = cfg.n_mc;
  // Bound the per-batch sensitivity storage (2 directions x 2 matrices of n x nB).
  int B = cfg.batch_size;
  if (jac || keep_samples) {
    const double per_sample = 4.0 * n * static_cast<double>(n) * sizeof(double) * (keep_samples ? 2 : 1);
    B = std::clamp(static_cast<int>((512.0 * (1 << 20)) / per_sample), 1, B);
  }
  const int n_batches = (S + B - 1) / B;
  const std::uint64_t iter_key =
      cfg.rng_streams == RngStreams::fresh ? static_cast<std::uint64_t>(st.iterations + 1) : 0;
  const bool need_r = want_a || keep_samples;
  const bool need_u = want_b || keep_samples;

  Accumulator total(n, want_a, want_b);
  const int group = std::max(1, thread_count());
  // One workspace per concurrent batch; reusing the large buffers avoids page-fault churn.
  struct Workspace {
    Eigen::MatrixXd xu, xr, U, R;
    BatchFields f;
    BatchJacobian jr, ju;
  };
  std::vector<Workspace> work(std::min(group, n_batches));
  for (int g0 = 0; g0 < n_batches; g0 += group) {
    const int gn = std::min(group, n_batches - g0);
    std::vector<Accumulator> parts(gn, Accumulator(n, want_a, want_b));
    std::vector<std::vector<FieldSample>> kept_s(gn);
    std::vector<std::vector<FieldSensitivities>> kept_j(gn);
    std::vector<std::string> errors(gn);
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < gn; ++i) {
      try {
        const int bi = g0 + i;
        const int s0 = bi * B, nb = std::min(B, S - s0);
        Workspace& w = work[i];
        Eigen::MatrixXd& xu = w.xu;
        Eigen::MatrixXd& xr = w.xr;
        xu.resize(n, nb);
        xr.resize(n, nb);
        for (int j = 0; j < nb; ++j) {
          const auto sample = static_cast<std::uint64_t>(s0 + j);
          auto ru = make_stream({cfg.seed, iter_key, static_cast<std::uint64_t>(l), sample, 0});
          auto rr = make_stream({cfg.seed, iter_key, static_cast<std::uint64_t>(l), sample, 1});
          fill_standard_normal(ru, xu.col(j));
          fill_standard_normal(rr, xr.col(j));
        }
        w.U = su.correlate(xu);
        w.R = sr.correlate(xr);
        const Eigen::MatrixXd& U = w.U;
        const Eigen::MatrixXd& R = w.R;
        BatchFields& f = w.f;
        solve_batch(c, U, R, cfg.activation, f);
        BatchJacobian& jr = w.jr;
        BatchJacobian& ju = w.ju;
        if (need_r) jacobian_batch(c, f, Direction::r, keep_samples, jr);
        if (need_u) jacobian_batch(c, f, Direction::u, keep_samples, ju);
        parts[i].add(f, &jr, &ju);
        if (keep_samples)
          for (int j = 0; j < nb; ++j) {
            kept_s[i].push_back(sample_from_batch(f, U, R, j, P, grid));
            kept_j[i].push_back(sensitivities_from_batch(jr, ju, nb, j, P, T));
          }
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
    for (int i = 0; i < gn; ++i) {
      if (!errors[i].empty()) fail(ErrorKind::NonFiniteValue, errors[i]);
      total.merge(parts[i]);
      for (auto& s : kept_s[i]) out.samples.push_back(std::move(s));
      for (auto& s : kept_j[i]) out.sensitivities.push_back(std::move(s));
    }
  }
  total.finalize();
  out.estimate.phi = to_kernel(total.phi / S, "phi");
  out.estimate.g = to_kernel(total.g / S, "g");
  const double norm = 1.0 / (cfg.gamma0 * dt * S);
  if (want_a) out.estimate.a = to_kernel(total.a * norm, "a");
  if (want_b) out.estimate.b = to_kernel(total.b * norm, "b");
  return out;
}

namespace {

double damped_update(Kernel& k, const Kernel& estimate, double beta, bool symmetric) {
  const Eigen::MatrixXd old = k.values();
  k.values() = (1.0 - beta) * old + beta * estimate.values();
  if (symmetric) k.symmetrize();
  const double scale = std::max(old.norm(), k.values().norm());
  return scale > 0 ? (k.values() - old).norm() / scale : 0.0;
}

}  // namespace

double DmftSolver::step() {
  auto& st = state_;
  const int L = st.config.depth;
  const double beta = st.config.beta;
  std::vector<LayerEstimate> est;
  est.reserve(L);
  for (int l = 1; l <= L; ++l) est.push_back(estimate_layer(l));

  IterationDiagnostics d;
  for (int l = 1; l <= L; ++l) {
    auto& e = est[l - 1].estimate;
    d.change_phi = std::max(d.change_phi, damped_update(st.phi[l], e.phi, beta, true));
    d.change_g = std::max(d.change_g, damped_update(st.g[l], e.g, beta, true));
    if (e.a) d.change_a = std::max(d.change_a, damped_update(st.a[l], *e.a, beta, false));
    if (e.b) d.change_b = std::max(d.change_b, damped_update(st.b[l - 1], *e.b, beta, false));
  }
  st.iterations += 1;
  refresh_predictions();
  d.iteration = st.iterations;
  d.max_change = std::max({d.change_phi, d.change_g, d.change_a, d.change_b});
  d.final_loss = st.loss[st.loss.size() - 1];
  d.ntk_trace = st.ntk_diagonal().back().trace();
  st.diagnostics.push_back(d);
  st.converged = d.max_change < st.config.tol;
  return d.max_change;
}

void DmftSolver::run(const Observer& observer) {
  auto& st = state_;
  while (st.iterations < st.config.max_iters) {
    const double change = step();
    if (observer) observer(st.diagnostics.back());
    if (change < st.config.tol) break;
  }
}

DmftState dmft_solve(const DmftConfig& cfg, const SampleSet& data, const TimeGrid& grid,
                     const DmftSolver::Observer& observer) {
  DmftSolver solver(cfg, data, grid);
  if (cfg.lazy() && cfg.lambda_wd == 0.0) {
    // The static kernels are the exact lazy fixed point.
    DmftState st = solver.take_state();
    st.iterations = 1;
    st.converged = true;
    IterationDiagnostics d;
    d.iteration = 1;
    d.final_loss = st.loss[st.loss.size() - 1];
    d.ntk_trace = st.ntk_diagonal().back().trace();
    st.diagnostics.push_back(d);
    if (observer) observer(d);
    return st;
  }
  if (cfg.time_segments == 1 || grid.n_steps() <= 2) {
    solver.run(observer);
    return solver.take_state();
  }
  // Continuation in the horizon; iterations and diagnostics accumulate.
  const int T = grid.n_steps(), n_seg = std::min(cfg.time_segments, T - 1);
  std::optional<DmftState> prev;
  std::vector<IterationDiagnostics> diags;
  for (int seg = 1; seg <= n_seg; ++seg) {
    const int Ts = 1 + static_cast<int>(std::lround(static_cast<double>(T - 1) * seg / n_seg));
    DmftSolver part(cfg, data, TimeGrid(Ts, grid.dt()));
    if (prev) part.warm_start(*prev);
    part.run([&](const IterationDiagnostics& d) {
      IterationDiagnostics out = d;
      out.iteration = static_cast<int>(diags.size()) + 1;
      diags.push_back(out);
      if (observer) observer(out);
    });
    prev = part.take_state();
  }
  DmftState st = std::move(*prev);
  st.diagnostics = std::move(diags);
  st.iterations = static_cast<int>(st.diagnostics.size());
  return st;
}

RepresenterReport representer_check(const DmftState& state, const SampleSet& data,
                                    double lambda_wd, double kappa) {
  const int P = data.n_train();
  const Eigen::MatrixXd K = state.ntk_diagonal().back();
  const double ridge = lambda_wd * kappa;
  Eigen::MatrixXd reg = K.topLeftCorner(P, P) + ridge * Eigen::MatrixXd::Identity(P, P);
  reg = 0.5 * (reg + reg.transpose()).eval();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(reg);
  require(ldlt.info() == Eigen::Success && ldlt.isPositive() &&
              ldlt.vectorD().minCoeff() > 1e-14 * std::max(1.0, reg.diagonal().maxCoeff()),
          ErrorKind::SingularSystem, "K + lambda kappa I is not invertible");
  const Eigen::VectorXd coef = ldlt.solve(data.targets());
  const int T = state.grid.n_steps();
  RepresenterReport rep;
  if (data.n_test() > 0) {
    rep.f_regression = K.bottomLeftCorner(data.n_test(), P) * coef;
    rep.f_dmft = state.f.values().col(T - 1).tail(data.n_test());
  } else {
    rep.f_regression = K.topLeftCorner(P, P) * coef;
    rep.f_dmft = state.f.values().col(T - 1).head(P);
  }
  rep.max_abs_deviation = (rep.f_dmft - rep.f_regression).cwiseAbs().maxCoeff();
  rep.relative_deviation =
      (rep.f_dmft - rep.f_regression).norm() / (rep.f_regression.norm() + 1e-300);
  return rep;
}

}  // namespace dmft
