#include "cartanflow/path.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>

#include "cartanflow/oracles.hpp"

namespace cartanflow {

namespace {

// --- builtins ----------------------------------------------------------------

Mat reflection2(double c, double s) {
  Mat m(2, 2);
  m << c, s, s, -c;
  return m;
}

// e^{-1/t^2}; exactly zero once the exponent underflows, together with every
// derivative factor that multiplies it.
double flat_bump(double t) {
  if (t == 0.0) return 0.0;
  double e = 1.0 / (t * t);
  if (e > 745.0) return 0.0;
  return std::exp(-e);
}

struct BuiltinPath {
  Family family;
  double t0, t1;
  Mat (*value)(double);
  Mat (*deriv)(double);
};

Mat rellich_value(double t) {
  double f = flat_bump(t);
  if (f == 0.0) return Mat::Zero(2, 2);
  return f * reflection2(std::cos(2.0 / t), std::sin(2.0 / t));
}

Mat rellich_deriv(double t) {
  double f = flat_bump(t);
  if (f == 0.0) return Mat::Zero(2, 2);
  double c = std::cos(2.0 / t), s = std::sin(2.0 / t);
  double a = 2.0 / (t * t * t);   // d/dt of -1/t^2
  double b = 2.0 / (t * t);       // -d/dt of 2/t
  return f * (a * reflection2(c, s) + b * reflection2(s, -c));
}

Mat chamber_cross_value(double t) {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = t;
  m(1, 1) = -t;
  return m;
}

Mat chamber_cross_deriv(double) {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = 1;
  m(1, 1) = -1;
  return m;
}

Mat rotation_flow_value(double t) {
  return 2.0 * reflection2(std::cos(2 * t), std::sin(2 * t));
}

Mat rotation_flow_deriv(double t) {
  return 4.0 * reflection2(-std::sin(2 * t), std::cos(2 * t));
}

// C-infinity with eigenvalue degeneracies accumulating at t = 0.
Mat kriegl_like_value(double t) {
  double f = flat_bump(t);
  if (f == 0.0) return Mat::Zero(2, 2);
  return f * std::sin(2.0 / t) *
         reflection2(std::cos(2.0 / t), std::sin(2.0 / t));
}

Mat kriegl_like_deriv(double t) {
  double f = flat_bump(t);
  if (f == 0.0) return Mat::Zero(2, 2);
  double c = std::cos(2.0 / t), s = std::sin(2.0 / t);
  double a = 2.0 / (t * t * t);
  double b = 2.0 / (t * t);
  // d/dt [f sin(2/t) M(2/t)] with M = reflection2(cos, sin), M' entries below.
  return (f * a * s - f * b * c) * reflection2(c, s) +
         f * s * b * reflection2(s, -c);
}

const std::pair<const char*, BuiltinPath> kBuiltins[] = {
    {"rellich", {real_sym_evd(2), -1.0, 1.0, &rellich_value, &rellich_deriv}},
    {"chamber-cross",
     {real_sym_evd(2), -1.0, 1.0, &chamber_cross_value, &chamber_cross_deriv}},
    {"rotation-flow",
     {real_sym_evd(2), 0.0, 6.283185307179586477, &rotation_flow_value,
      &rotation_flow_deriv}},
    {"kriegl-like",
     {real_sym_evd(2), -1.0, 1.0, &kriegl_like_value, &kriegl_like_deriv}},
};

const BuiltinPath& builtin_path(const std::string& name) {
  for (auto& [n, b] : kBuiltins)
    if (name == n) return b;
  throw UnknownName("unknown builtin path: " + name);
}

}  // namespace

PathSpec builtin_spec(const std::string& name) {
  const BuiltinPath& b = builtin_path(name);
  PathSpec spec;
  spec.family = b.family;
  spec.kind = PathSpec::Kind::Builtin;
  spec.t_start = b.t0;
  spec.t_end = b.t1;
  spec.builtin_name = name;
  return spec;
}

std::vector<std::string> builtin_names() {
  std::vector<std::string> out;
  for (auto& [n, b] : kBuiltins) out.push_back(n);
  return out;
}

// --- PathSpec ----------------------------------------------------------------

bool PathSpec::has_derivative() const {
  if (kind == Kind::Samples) return sample_derivative && times.size() >= 2;
  return true;
}

double PathSpec::validate() const {
  double r = 0.0;
  auto member = [&](const Mat& m) {
    r = std::max(r, validate_p({family, m}));
  };
  switch (kind) {
    case Kind::Samples: {
      if (times.size() != samples.size() || times.size() < 2)
        throw InputError("sample path needs matching times/matrices, >= 2");
      for (size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
          throw InputError("sample times must be strictly increasing");
      for (const Mat& m : samples) member(m);
      break;
    }
    case Kind::TrigPoly: {
      if (const_coeff.size()) member(const_coeff);
      for (const Mat& m : cos_coeffs) member(m);
      for (const Mat& m : sin_coeffs) member(m);
      break;
    }
    case Kind::Builtin: {
      const BuiltinPath& b = builtin_path(builtin_name);
      if (!(b.family == family))
        throw InputError("builtin " + builtin_name + " lives in " +
                         to_string(b.family));
      break;
    }
  }
  if (!(t_start < t_end)) throw InputError("path domain must satisfy t_start < t_end");
  return r;
}

std::vector<double> make_grid(double a, double b, int n) {
  if (n < 2) throw InputError("grid needs at least 2 samples");
  if (!(a < b)) throw InputError("grid needs t_start < t_end");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i)
    g[i] = a + (b - a) * static_cast<double>(i) / (n - 1);
  g.back() = b;
  return g;
}

PathPoint eval_path(const PathSpec& spec, double t) {
  const double slack =
      1e-12 * (1.0 + std::abs(spec.t_start) + std::abs(spec.t_end));
  if (t < spec.t_start - slack || t > spec.t_end + slack)
    throw OutOfDomain("t = " + std::to_string(t) + " outside [" +
                      std::to_string(spec.t_start) + ", " +
                      std::to_string(spec.t_end) + "]");

  switch (spec.kind) {
    case PathSpec::Kind::Builtin: {
      const BuiltinPath& b = builtin_path(spec.builtin_name);
      return {{spec.family, b.value(t)},
              PElement{spec.family, b.deriv(t)}};
    }
    case PathSpec::Kind::TrigPoly: {
      Mat v = spec.const_coeff.size()
                  ? spec.const_coeff
                  : Mat::Zero(spec.family.rows, spec.family.cols);
      Mat d = Mat::Zero(spec.family.rows, spec.family.cols);
      for (size_t j = 0; j < spec.cos_coeffs.size(); ++j) {
        double w = static_cast<double>(j + 1);
        v += std::cos(w * t) * spec.cos_coeffs[j];
        d -= w * std::sin(w * t) * spec.cos_coeffs[j];
      }
      for (size_t j = 0; j < spec.sin_coeffs.size(); ++j) {
        double w = static_cast<double>(j + 1);
        v += std::sin(w * t) * spec.sin_coeffs[j];
        d += w * std::cos(w * t) * spec.sin_coeffs[j];
      }
      return {{spec.family, std::move(v)}, PElement{spec.family, std::move(d)}};
    }
    case PathSpec::Kind::Samples: {
      const auto& ts = spec.times;
      const int n = static_cast<int>(ts.size());
      // Local cubic Lagrange interpolant through the 4 nearest samples.
      int hi = static_cast<int>(
          std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
      int w0 = std::clamp(hi - 2, 0, std::max(0, n - 4));
      int len = std::min(4, n);
      Mat v = Mat::Zero(spec.family.rows, spec.family.cols);
      Mat d = Mat::Zero(spec.family.rows, spec.family.cols);
      for (int k = 0; k < len; ++k) {
        double lk = 1.0;
        for (int j = 0; j < len; ++j)
          if (j != k) lk *= (t - ts[w0 + j]) / (ts[w0 + k] - ts[w0 + j]);
        double dk = 0.0;
        for (int m = 0; m < len; ++m) {
          if (m == k) continue;
          double term = 1.0 / (ts[w0 + k] - ts[w0 + m]);
          for (int j = 0; j < len; ++j)
            if (j != k && j != m)
              term *= (t - ts[w0 + j]) / (ts[w0 + k] - ts[w0 + j]);
          dk += term;
        }
        v += lk * spec.samples[w0 + k];
        d += dk * spec.samples[w0 + k];
      }
      PathPoint out{{spec.family, std::move(v)}, std::nullopt};
      if (spec.has_derivative())
        out.derivative = PElement{spec.family, std::move(d)};
      return out;
    }
  }
  throw InputError("unknown path kind");
}

// --- parallel helper ----------------------------------------------------------

namespace detail {

void parallel_for(int n, const std::function<void(int)>& fn) {
  unsigned hw = std::thread::hardware_concurrency();
  int workers = std::min<int>(hw ? static_cast<int>(hw) : 1, (n + 63) / 64);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mutex;
  auto run = [&]() {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::scoped_lock lock(err_mutex);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace detail

// --- sorted curve --------------------------------------------------------------

DiagonalizedPath sorted_curve(const PathSpec& spec,
                              const std::vector<double>& grid,
                              const Tolerances& tol) {
  const int n = static_cast<int>(grid.size());
  DiagonalizedPath out;
  out.family = spec.family;
  out.times = grid;
  out.lambda_sorted.resize(n);
  out.face.resize(n);
  out.residual_offdiag.assign(n, 0.0);
  out.residual_group.assign(n, 0.0);
  std::vector<char> bad(n, 0);

  detail::parallel_for(n, [&](int i) {
    PathPoint pt = eval_path(spec, grid[i]);
    if (!pt.value.data.allFinite()) {
      bad[i] = 1;
      return;
    }
    try {
      DiagonalizeResult d = diagonalize_point(pt.value, tol);
      out.lambda_sorted[i] = d.lambda.coords;
      out.face[i] = weyl::face_of(d.lambda, tol.face_tol);
      PElement rec = adjoint_action(d.u, embed_a(d.lambda));
      out.residual_offdiag[i] = max_norm(Mat(rec.data - pt.value.data));
      out.residual_group[i] = validate_k(d.u);
    } catch (const SolverFailure&) {
      bad[i] = 1;
    }
  });
  for (int i = 0; i < n; ++i)
    if (bad[i]) {
      out.failed.push_back(i);
      out.lambda_sorted[i] =
          Vec::Constant(spec.family.a_dim(), std::nan(""));
    }
  return out;
}

// --- joint diagonalization -----------------------------------------------------

namespace {

struct Leaf {
  int begin, len;
};

template <typename M>
struct JointDecomp {
  M v;
  std::vector<Leaf> leaves;
};

// Recursive refinement over eigenvalue clusters, flattened into one sweep:
// the first matrix splits the space, each further matrix refines within the
// clusters of the previous ones. Cluster order is descending, so the columns
// end up ordered lexicographically by eigenvalue tuples.
template <typename M>
JointDecomp<M> joint_eigen(const std::vector<M>& mats, int dim,
                           double cluster_tol) {
  JointDecomp<M> out;
  out.v = M::Identity(dim, dim);
  out.leaves = {{0, dim}};
  for (const M& a : mats) {
    const double thr = cluster_tol * (1.0 + a.norm());
    std::vector<Leaf> next;
    next.reserve(out.leaves.size());
    for (const Leaf& leaf : out.leaves) {
      if (leaf.len == 1) {
        next.push_back(leaf);
        continue;
      }
      M q = out.v.middleCols(leaf.begin, leaf.len);
      M b = q.adjoint() * a * q;
      b = ((b + M(b.adjoint())) * 0.5).eval();
      Eigen::SelfAdjointEigenSolver<M> es(b);
      if (es.info() != Eigen::Success)
        throw SolverFailure("joint diagonalization: block solve failed");
      M w(leaf.len, leaf.len);
      Vec ev(leaf.len);
      for (int i = 0; i < leaf.len; ++i) {
        ev[i] = es.eigenvalues()[leaf.len - 1 - i];
        w.col(i) = es.eigenvectors().col(leaf.len - 1 - i);
      }
      out.v.middleCols(leaf.begin, leaf.len) = q * w;
      int b0 = 0;
      for (int i = 1; i <= leaf.len; ++i) {
        if (i == leaf.len || ev[i - 1] - ev[i] > thr) {
          next.push_back({leaf.begin + b0, i - b0});
          b0 = i;
        }
      }
    }
    out.leaves = std::move(next);
  }
  return out;
}

template <typename M>
Vec leaf_tuple(const M& v, const Leaf& leaf, const std::vector<M>& mats) {
  Vec tuple(static_cast<int>(mats.size()));
  auto q = v.middleCols(leaf.begin, leaf.len);
  for (size_t j = 0; j < mats.size(); ++j) {
    auto b = q.adjoint() * mats[j] * q;
    tuple[static_cast<int>(j)] =
        std::real(Complex(b.trace())) / static_cast<double>(leaf.len);
  }
  return tuple;
}

// Sign of the first significant tuple entry: +1 / -1, or 0 for a zero tuple.
int tuple_orientation(const Vec& tuple, const Vec& thresholds) {
  for (int j = 0; j < tuple.size(); ++j) {
    if (std::abs(tuple[j]) > thresholds[j]) return tuple[j] > 0 ? 1 : -1;
  }
  return 0;
}

// Orthonormal basis of the span of the columns of z (rank known in advance).
RMat real_span_basis(const RMat& z, int rank) {
  if (rank == 0) return RMat(z.rows(), 0);
  Eigen::JacobiSVD<RMat> svd(z, Eigen::ComputeThinU);
  return svd.matrixU().leftCols(rank);
}

Mat complex_span_basis(const Mat& z, int rank) {
  if (rank == 0) return Mat(z.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(z, Eigen::ComputeThinU);
  return svd.matrixU().leftCols(rank);
}

}  // namespace

SimultaneousResult simultaneous_diagonalize(const std::vector<PElement>& xs,
                                            double commute_tol,
                                            const Tolerances& tol) {
  if (xs.empty()) throw InputError("simultaneous_diagonalize: empty tuple");
  const Family f = xs[0].family;
  for (const PElement& x : xs) {
    if (!(x.family == f))
      throw ShapeMismatch("simultaneous_diagonalize: mixed families");
    detail::check_shape(f, x.data);
  }
  for (size_t i = 0; i < xs.size(); ++i) {
    for (size_t j = i + 1; j < xs.size(); ++j) {
      double b = bracket_pp(xs[i], xs[j]).frob();
      double bound = commute_tol * (1.0 + xs[i].data.norm()) *
                     (1.0 + xs[j].data.norm());
      if (b > bound)
        throw NotCommuting("elements " + std::to_string(i) + " and " +
                           std::to_string(j) + " do not commute (|[x,y]| = " +
                           std::to_string(b) + ")");
    }
  }

  const int m = static_cast<int>(xs.size());
  KElement u = k_identity(f);

  switch (f.id) {
    case FamilyId::RealSymEvd: {
      std::vector<RMat> mats;
      mats.reserve(m);
      for (const PElement& x : xs) mats.push_back(x.data.real());
      auto jd = joint_eigen<RMat>(mats, f.rows, tol.cluster_tol);
      u.left = jd.v.cast<Complex>();
      break;
    }
    case FamilyId::HermEvd: {
      std::vector<Mat> mats;
      mats.reserve(m);
      for (const PElement& x : xs) mats.push_back(x.data);
      auto jd = joint_eigen<Mat>(mats, f.rows, tol.cluster_tol);
      u.left = jd.v;
      break;
    }
    case FamilyId::SkewSymEvd: {
      std::vector<Mat> mats;
      mats.reserve(m);
      for (const PElement& x : xs) mats.push_back(detail::to_herm_picture(x));
      auto jd = joint_eigen<Mat>(mats, f.rows, tol.cluster_tol);
      Vec thresholds(m);
      for (int j = 0; j < m; ++j)
        thresholds[j] = tol.cluster_tol * (1.0 + mats[j].norm());

      const int n = f.rows;
      RMat cols(n, n);
      Mat zero_space(n, 0);
      int k = 0;
      const double sqrt2 = std::sqrt(2.0);
      for (const Leaf& leaf : jd.leaves) {
        Vec tuple = leaf_tuple<Mat>(jd.v, leaf, mats);
        int orient = tuple_orientation(tuple, thresholds);
        if (orient == 0) {
          Mat z(n, zero_space.cols() + leaf.len);
          z << zero_space, jd.v.middleCols(leaf.begin, leaf.len);
          zero_space = std::move(z);
        } else if (orient > 0) {
          for (int c = 0; c < leaf.len; ++c) {
            CVec v = jd.v.col(leaf.begin + c);
            cols.col(2 * k) = sqrt2 * v.real();
            cols.col(2 * k + 1) = sqrt2 * v.imag();
            ++k;
          }
        }
      }
      const int kernel = n - 2 * k;
      if (kernel > 0) {
        RMat span(n, 2 * static_cast<int>(zero_space.cols()));
        span << zero_space.real(), zero_space.imag();
        RMat basis = real_span_basis(span, kernel);
        if (basis.cols() != kernel)
          throw SolverFailure("joint diagonalization: kernel pairing failed");
        cols.rightCols(kernel) = basis;
      }
      u.left = cols.cast<Complex>();
      break;
    }
    case FamilyId::RealSvd:
    case FamilyId::ComplexSvd: {
      const int p = f.rows, q = f.cols;
      const bool real = f.id == FamilyId::RealSvd;
      Mat lcols = Mat::Zero(p, p);
      Mat rcols = Mat::Zero(q, q);
      int k = 0;
      const double sqrt2 = std::sqrt(2.0);

      auto assemble = [&](const auto& jd, const auto& mats, auto span_basis) {
        Vec thresholds(m);
        for (int j = 0; j < m; ++j)
          thresholds[j] = tol.cluster_tol * (1.0 + mats[j].norm());
        using MM = std::decay_t<decltype(jd.v)>;
        MM zero_space(p + q, 0);
        for (const Leaf& leaf : jd.leaves) {
          Vec tuple = leaf_tuple<MM>(jd.v, leaf, mats);
          int orient = tuple_orientation(tuple, thresholds);
          if (orient == 0) {
            MM z(p + q, zero_space.cols() + leaf.len);
            z << zero_space, jd.v.middleCols(leaf.begin, leaf.len);
            zero_space = std::move(z);
          } else if (orient > 0) {
            for (int c = 0; c < leaf.len; ++c) {
              auto v = jd.v.col(leaf.begin + c);
              lcols.col(k) = (sqrt2 * v.head(p)).template cast<Complex>();
              rcols.col(k) = (sqrt2 * v.tail(q)).template cast<Complex>();
              ++k;
            }
          }
        }
        if (k > q)
          throw SolverFailure("joint diagonalization: too many nonzero pairs");
        // The joint kernel splits into a left-only and a right-only part.
        MM top = zero_space.topRows(p);
        MM bot = zero_space.bottomRows(q);
        auto lext = span_basis(top, p - k);
        auto rext = span_basis(bot, q - k);
        if (lext.cols() != p - k || rext.cols() != q - k)
          throw SolverFailure("joint diagonalization: kernel split failed");
        lcols.rightCols(p - k) = lext.template cast<Complex>();
        rcols.rightCols(q - k) = rext.template cast<Complex>();
      };

      if (real) {
        std::vector<RMat> mats;
        mats.reserve(m);
        for (const PElement& x : xs)
          mats.push_back(detail::to_herm_picture(x).real());
        auto jd = joint_eigen<RMat>(mats, p + q, tol.cluster_tol);
        assemble(jd, mats, real_span_basis);
      } else {
        std::vector<Mat> mats;
        mats.reserve(m);
        for (const PElement& x : xs) mats.push_back(detail::to_herm_picture(x));
        auto jd = joint_eigen<Mat>(mats, p + q, tol.cluster_tol);
        assemble(jd, mats, complex_span_basis);
      }
      u.left = std::move(lcols);
      u.right = std::move(rcols);
      break;
    }
  }

  Vec dummy = Vec::Zero(f.a_dim());
  int kernel_dims = 0;
  if (f.id == FamilyId::SkewSymEvd) {
    // project_a after the column flip picks up any sign change, so the
    // repaired lambda entry needs no bookkeeping here.
    kernel_dims = f.rows % 2;
  }
  detail::repair_determinant(u, dummy, kernel_dims);

  SimultaneousResult out;
  out.u = u;
  KElement uinv = k_inverse(u);
  out.lambdas.reserve(m);
  out.residuals.reserve(m);
  for (const PElement& x : xs) {
    auto [av, res] = project_a(adjoint_action(uinv, x));
    out.lambdas.push_back(std::move(av));
    out.residuals.push_back(res);
  }
  return out;
}

// --- pointwise derivative -------------------------------------------------------

PointwiseJet pointwise_derivative(const PathSpec& spec, double t,
                                  const Tolerances& tol) {
  PathPoint pt = eval_path(spec, t);
  if (!pt.derivative)
    throw InputError("pointwise_derivative: path has no derivative");
  EigenStructure es = eigen_structure(pt.value, tol.cluster_tol);
  PElement projected = commutant_projection(es, *pt.derivative);

  double comm = bracket_pp(pt.value, projected).frob();
  double bound = 10.0 * tol.eps_solve * (1.0 + pt.value.data.norm()) *
                 (1.0 + pt.derivative->data.norm());
  if (comm > bound)
    throw NotCommuting(
        "projection does not commute with the base point (|[rho, Pi rho']| = " +
        std::to_string(comm) + "); projection is inconsistent");

  SimultaneousResult sim = simultaneous_diagonalize(
      {pt.value, projected}, 10.0 * tol.eps_solve, tol);
  return {sim.lambdas[0], sim.lambdas[1], sim.u};
}

// --- C1 lift ---------------------------------------------------------------------

DiagonalizedPath c1_lift(const PathSpec& spec, const std::vector<double>& grid,
                         const Tolerances& tol) {
  const int n = static_cast<int>(grid.size());
  if (n < 1) throw InputError("c1_lift: empty grid");
  if (!spec.has_derivative())
    throw InputError("c1_lift: path has no derivative");

  std::vector<PointwiseJet> jets(n);
  detail::parallel_for(n, [&](int i) {
    jets[i] = pointwise_derivative(spec, grid[i], tol);
  });

  DiagonalizedPath out;
  out.family = spec.family;
  out.times = grid;
  out.lambda_sorted.resize(n);
  out.lambda_lift.resize(n);
  out.mu.resize(n);
  out.face.resize(n);
  out.residual_offdiag.assign(n, 0.0);
  out.residual_group.assign(n, 0.0);

  const WeylType wt = spec.family.weyl_type();
  out.lambda_lift[0] = jets[0].lambda.coords;
  out.mu[0] = jets[0].mu.coords;
  for (int i = 1; i < n; ++i) {
    double beta = grid[i] - grid[i - 1];
    weyl::JetMatch match =
        weyl::match_jet(wt, out.lambda_lift[i - 1], out.mu[i - 1],
                        jets[i].lambda.coords, jets[i].mu.coords, beta);
    if (match.ambiguous) ++out.match_ambiguous;
    out.lambda_lift[i] = weyl::apply(match.w, jets[i].lambda.coords);
    out.mu[i] = weyl::apply(match.w, jets[i].mu.coords);
  }

  for (int i = 0; i < n; ++i) {
    AVector lift{spec.family, out.lambda_lift[i]};
    auto sorted = weyl::chamber_sort(lift);
    out.lambda_sorted[i] = sorted.sorted.coords;
    out.face[i] = weyl::face_of(sorted.sorted, tol.face_tol);
    PElement rec = adjoint_action(jets[i].u, embed_a(jets[i].lambda));
    PathPoint pt = eval_path(spec, grid[i]);
    out.residual_offdiag[i] = max_norm(Mat(rec.data - pt.value.data));
    out.residual_group[i] = validate_k(jets[i].u);
  }
  return out;
}

// --- analytic flow ------------------------------------------------------------------

namespace {

KElement k_scale_add(const KElement& u, double h, const KElement& d) {
  KElement out = u;
  out.left = u.left + h * d.left;
  if (u.right.size()) out.right = u.right + h * d.right;
  return out;
}

KElement k_tangent_apply(const KTangent& k, const KElement& u) {
  KElement out = u;
  out.left = k.left * u.left;
  if (u.right.size()) out.right = k.right * u.right;
  return out;
}

Mat polar_factor(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

// Nearest group element; preserves the determinant component.
void retract(KElement& u) {
  u.left = polar_factor(u.left);
  if (u.right.size()) u.right = polar_factor(u.right);
}

}  // namespace

DiagonalizedPath analytic_flow_from(const PathSpec& spec,
                                    const std::vector<double>& grid,
                                    const KElement& u0, double gap_min,
                                    const Tolerances& tol) {
  const int n = static_cast<int>(grid.size());
  if (n < 1) throw InputError("analytic_flow: empty grid");
  if (!spec.has_derivative())
    throw InputError("analytic_flow: path has no derivative");

  auto generator = [&](double t) -> KTangent {
    PathPoint pt = eval_path(spec, t);
    EigenStructure es = eigen_structure(pt.value, tol.cluster_tol);
    double floor = gap_min >= 0.0
                       ? gap_min
                       : tol.gap_min_flow * (1.0 + pt.value.data.norm());
    if (es.gap < floor || !es.regular())
      throw NearSingularPoint("spectral gap " + std::to_string(es.gap) +
                                  " below " + std::to_string(floor) +
                                  " at t = " + std::to_string(t),
                              t);
    PElement cperp = complement_projection(es, *pt.derivative);
    return ad_inverse(es, cperp, floor, tol);
  };

  DiagonalizedPath out;
  out.family = spec.family;
  out.times = grid;
  out.lambda_sorted.resize(n);
  out.lambda_lift.resize(n);
  out.u.resize(n);
  out.face.resize(n);
  out.residual_offdiag.assign(n, 0.0);
  out.residual_group.assign(n, 0.0);

  KElement u = u0;
  auto record = [&](int i) {
    PathPoint pt = eval_path(spec, grid[i]);
    auto [av, res] = project_a(adjoint_action(k_inverse(u), pt.value));
    out.lambda_lift[i] = av.coords;
    out.residual_offdiag[i] = res;
    out.residual_group[i] = validate_k(u);
    auto sorted = weyl::chamber_sort(av);
    out.lambda_sorted[i] = sorted.sorted.coords;
    out.face[i] = weyl::face_of(sorted.sorted, tol.face_tol);
    out.u[i] = u;
  };

  KTangent k_left = generator(grid[0]);
  record(0);
  for (int i = 1; i < n; ++i) {
    const double h = grid[i] - grid[i - 1];
    if (!(h > 0)) throw InputError("analytic_flow: grid must increase");
    KTangent k_mid = generator(grid[i - 1] + 0.5 * h);
    KTangent k_right = generator(grid[i]);

    KElement s1 = k_tangent_apply(k_left, u);
    KElement s2 = k_tangent_apply(k_mid, k_scale_add(u, 0.5 * h, s1));
    KElement s3 = k_tangent_apply(k_mid, k_scale_add(u, 0.5 * h, s2));
    KElement s4 = k_tangent_apply(k_right, k_scale_add(u, h, s3));

    u.left += (h / 6.0) * (s1.left + 2.0 * s2.left + 2.0 * s3.left + s4.left);
    if (u.right.size())
      u.right +=
          (h / 6.0) * (s1.right + 2.0 * s2.right + 2.0 * s3.right + s4.right);
    retract(u);
    record(i);
    k_left = std::move(k_right);
  }
  return out;
}

DiagonalizedPath analytic_flow(const PathSpec& spec,
                               const std::vector<double>& grid,
                               double gap_min, const Tolerances& tol) {
  if (grid.empty()) throw InputError("analytic_flow: empty grid");
  PathPoint pt = eval_path(spec, grid[0]);
  DiagonalizeResult d = diagonalize_point(pt.value, tol);
  return analytic_flow_from(spec, grid, d.u, gap_min, tol);
}

// --- measurable curve ----------------------------------------------------------------

DiagonalizedPath measurable_curve(const PathSpec& spec,
                                  const std::vector<double>& grid,
                                  const Tolerances& tol) {
  const int n = static_cast<int>(grid.size());
  const bool with_mu = spec.has_derivative();
  DiagonalizedPath out;
  out.family = spec.family;
  out.times = grid;
  out.lambda_sorted.resize(n);
  out.u.resize(n);
  out.face.resize(n);
  out.residual_offdiag.assign(n, 0.0);
  out.residual_group.assign(n, 0.0);
  if (with_mu) out.mu.resize(n);

  detail::parallel_for(n, [&](int i) {
    if (with_mu) {
      PointwiseJet jet = pointwise_derivative(spec, grid[i], tol);
      out.lambda_sorted[i] = jet.lambda.coords;
      out.mu[i] = jet.mu.coords;
      out.u[i] = jet.u;
      PElement rec = adjoint_action(jet.u, embed_a(jet.lambda));
      PathPoint pt = eval_path(spec, grid[i]);
      out.residual_offdiag[i] = max_norm(Mat(rec.data - pt.value.data));
      out.residual_group[i] = validate_k(jet.u);
    } else {
      PathPoint pt = eval_path(spec, grid[i]);
      DiagonalizeResult d = diagonalize_point(pt.value, tol);
      out.lambda_sorted[i] = d.lambda.coords;
      out.u[i] = d.u;
      PElement rec = adjoint_action(d.u, embed_a(d.lambda));
      out.residual_offdiag[i] = max_norm(Mat(rec.data - pt.value.data));
      out.residual_group[i] = validate_k(d.u);
    }
    AVector av{spec.family, out.lambda_sorted[i]};
    out.face[i] = weyl::face_of(av, tol.face_tol);
  });

  // Almost-everywhere derivative report: at regular interior samples the
  // sorted finite difference should reproduce the multiset of mu.
  if (with_mu && n >= 3) {
    int regular = 0, matched = 0;
    for (int i = 1; i + 1 < n; ++i) {
      if (!out.face[i].regular()) continue;
      ++regular;
      double h2 = out.times[i + 1] - out.times[i - 1];
      Vec fd = (out.lambda_sorted[i + 1] - out.lambda_sorted[i - 1]) / h2;
      Vec mu_sorted = out.mu[i];
      std::sort(mu_sorted.begin(), mu_sorted.end(), std::greater<>());
      std::sort(fd.begin(), fd.end(), std::greater<>());
      double ae_tol =
          100.0 * h2 * h2 * (1.0 + max_norm(out.mu[i])) + 1e-9;
      if (max_norm(Vec(fd - mu_sorted)) <= ae_tol) ++matched;
    }
    out.ae_match_fraction =
        regular == 0 ? 1.0
                     : static_cast<double>(matched) / static_cast<double>(regular);
  }
  return out;
}

// --- resolvent cross-check --------------------------------------------------------------

double resolvent_crosscheck(const PathSpec& spec, double t, double h_fd,
                            const Tolerances& tol) {
  PathPoint pt = eval_path(spec, t);
  if (!pt.derivative)
    throw InputError("resolvent_crosscheck: path has no derivative");
  EigenStructure es = eigen_structure(pt.value, tol.cluster_tol);
  double floor = tol.gap_min_flow * (1.0 + pt.value.data.norm());
  if (es.gap < floor || !es.regular())
    throw NearSingularPoint("resolvent_crosscheck needs a regular point", t);

  KTangent k = ad_inverse(es, complement_projection(es, *pt.derivative),
                          floor, tol);
  const int d = spec.family.herm_dim();
  Mat k_ambient;
  if (spec.family.is_svd()) {
    k_ambient = Mat::Zero(d, d);
    k_ambient.topLeftCorner(spec.family.rows, spec.family.rows) = k.left;
    k_ambient.bottomRightCorner(spec.family.cols, spec.family.cols) = k.right;
  } else {
    k_ambient = k.left;
  }

  oracles::ProjectorDerivatives pd =
      oracles::finite_diff_projectors(spec, t, h_fd, tol);
  Mat acc = Mat::Zero(d, d);
  for (size_t c = 0; c < pd.projections.size(); ++c)
    acc += 0.5 * (pd.derivatives[c] * pd.projections[c] -
                  pd.projections[c] * pd.derivatives[c]);
  return (k_ambient - acc).norm();
}

}  // namespace cartanflow
