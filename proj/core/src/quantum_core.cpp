#include "cisim/quantum_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cisim/error.hpp"

namespace cisim {

SubsystemLayout::SubsystemLayout(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw InvalidDimension("layout needs at least one subsystem");
  total_ = 1;
  for (int d : dims_) {
    if (d < 2) throw InvalidDimension("subsystem dimension must be >= 2, got " + std::to_string(d));
    total_ *= d;
  }
}

int SubsystemLayout::dim(int slot) const {
  if (slot < 0 || slot >= slots()) throw LayoutError("slot " + std::to_string(slot) + " out of range");
  return dims_[std::size_t(slot)];
}

OperatorMatrix::OperatorMatrix(SubsystemLayout layout, Mat m, bool claim_hermitian)
    : layout_(std::move(layout)), m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() != layout_.total())
    throw LayoutError("operator size does not match layout");
  if (claim_hermitian && !is_hermitian()) throw SpecError("operator claimed Hermitian but is not");
}

bool OperatorMatrix::is_hermitian(double rel_tol) const {
  return hermiticity_defect(m_) <= rel_tol * std::max(max_abs(m_), 1e-300);
}

OperatorMatrix OperatorMatrix::adjoint() const { return {layout_, m_.adjoint()}; }

OperatorMatrix& OperatorMatrix::operator+=(const OperatorMatrix& o) {
  if (!(layout_ == o.layout_)) throw LayoutError("layout mismatch in operator sum");
  m_ += o.m_;
  return *this;
}

OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b) {
  return a + cplx(-1.0) * b;
}

OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
  if (!(a.layout_ == b.layout_)) throw LayoutError("layout mismatch in operator product");
  return {a.layout_, a.m_ * b.m_};
}

OperatorMatrix operator*(cplx s, const OperatorMatrix& a) { return {a.layout_, s * a.m_}; }

QuantumState QuantumState::pure(SubsystemLayout layout, Vec psi, double norm_tol) {
  if (psi.size() != layout.total()) throw LayoutError("state vector size does not match layout");
  if (std::abs(psi.norm() - 1.0) > norm_tol) throw InvalidArgument("pure state is not normalized");
  QuantumState s;
  s.layout_ = std::move(layout);
  s.kind_ = StateKind::Pure;
  s.psi_ = std::move(psi);
  return s;
}

QuantumState QuantumState::mixed(SubsystemLayout layout, Mat rho, const StateTolerance& tol) {
  if (rho.rows() != layout.total() || rho.cols() != layout.total())
    throw LayoutError("density matrix size does not match layout");
  if (std::abs(rho.trace() - 1.0) > tol.norm) throw InvalidArgument("density matrix trace != 1");
  if (hermiticity_defect(rho) > tol.hermiticity) throw InvalidArgument("density matrix not Hermitian");
  if (min_eigenvalue_hermitian(rho) < tol.min_eigenvalue)
    throw InvalidArgument("density matrix has a negative eigenvalue");
  QuantumState s;
  s.layout_ = std::move(layout);
  s.kind_ = StateKind::Mixed;
  s.rho_ = std::move(rho);
  return s;
}

const Vec& QuantumState::vector() const {
  if (kind_ != StateKind::Pure) throw InvalidArgument("mixed state has no state vector");
  return psi_;
}

Mat QuantumState::density() const {
  return kind_ == StateKind::Pure ? Mat(psi_ * psi_.adjoint()) : rho_;
}

OperatorMatrix annihilation(int dim) {
  if (dim < 2) throw InvalidDimension("annihilation needs dim >= 2");
  Mat a = Mat::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(double(n));
  return {SubsystemLayout({dim}), a};
}

OperatorMatrix creation(int dim) { return annihilation(dim).adjoint(); }

OperatorMatrix number(int dim) {
  if (dim < 2) throw InvalidDimension("number operator needs dim >= 2");
  Mat n = Mat::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) n(k, k) = double(k);
  return {SubsystemLayout({dim}), n};
}

OperatorMatrix identity(int dim) { return {SubsystemLayout({dim}), Mat::Identity(dim, dim)}; }

OperatorMatrix pauli(Axis axis) {
  Mat m(2, 2);
  const cplx i(0.0, 1.0);
  switch (axis) {
    case Axis::X: m << 1.0, 0.0, 0.0, -1.0; break;
    case Axis::Y: m << 0.0, 1.0, 1.0, 0.0; break;
    case Axis::Z: m << 0.0, -i, i, 0.0; break;
  }
  return {SubsystemLayout({2}), m};
}

OperatorMatrix projector_plus() {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = 1.0;
  return {SubsystemLayout({2}), m};
}

OperatorMatrix projector_minus() {
  Mat m = Mat::Zero(2, 2);
  m(1, 1) = 1.0;
  return {SubsystemLayout({2}), m};
}

OperatorMatrix embed(const OperatorMatrix& op, int slot, const SubsystemLayout& layout) {
  if (op.layout().slots() != 1) throw LayoutError("embed expects a single-subsystem operator");
  if (op.matrix().rows() != layout.dim(slot)) throw LayoutError("operator dimension does not match slot");
  Eigen::Index left = 1, right = 1;
  for (int s = 0; s < slot; ++s) left *= layout.dim(s);
  for (int s = slot + 1; s < layout.slots(); ++s) right *= layout.dim(s);
  const Mat& m = op.matrix();
  const Eigen::Index d = m.rows();
  Mat out = Mat::Zero(layout.total(), layout.total());
  for (Eigen::Index l = 0; l < left; ++l)
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) {
        if (m(i, j) == cplx(0.0)) continue;
        for (Eigen::Index r = 0; r < right; ++r)
          out((l * d + i) * right + r, (l * d + j) * right + r) = m(i, j);
      }
  return {layout, out};
}

namespace {
SubsystemLayout concat(const SubsystemLayout& a, const SubsystemLayout& b) {
  std::vector<int> dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  return SubsystemLayout(dims);
}
}  // namespace

OperatorMatrix tensor(const OperatorMatrix& a, const OperatorMatrix& b) {
  return {concat(a.layout(), b.layout()), kron(a.matrix(), b.matrix())};
}

QuantumState tensor(const QuantumState& a, const QuantumState& b) {
  const SubsystemLayout l = concat(a.layout(), b.layout());
  if (a.kind() == StateKind::Pure && b.kind() == StateKind::Pure) {
    Vec v(l.total());
    const Vec& x = a.vector();
    const Vec& y = b.vector();
    for (Eigen::Index i = 0; i < x.size(); ++i) v.segment(i * y.size(), y.size()) = x(i) * y;
    return QuantumState::pure(l, v);
  }
  return QuantumState::mixed(l, kron(a.density(), b.density()));
}

QuantumState tensor(const std::vector<QuantumState>& parts) {
  if (parts.empty()) throw InvalidArgument("tensor of an empty state list");
  QuantumState out = parts.front();
  for (std::size_t k = 1; k < parts.size(); ++k) out = tensor(out, parts[k]);
  return out;
}

QuantumState basis_state(int dim, int n) {
  if (dim < 2) throw InvalidDimension("basis state needs dim >= 2");
  if (n < 0 || n >= dim) throw InvalidArgument("basis index out of range");
  Vec v = Vec::Zero(dim);
  v(n) = 1.0;
  return QuantumState::pure(SubsystemLayout({dim}), v);
}

QuantumState qubit_plus() { return basis_state(2, 0); }
QuantumState qubit_minus() { return basis_state(2, 1); }

int min_coherent_dim(double abs_alpha) {
  return std::max(2, int(std::ceil(abs_alpha * abs_alpha + 5.0 * abs_alpha + 5.0 - 1e-12)));
}

namespace {
void check_coherent_dim(cplx alpha, int dim) {
  if (dim < 2) throw InvalidDimension("coherent state needs dim >= 2");
  const double r = std::abs(alpha);
  if (r * r + 5.0 * r + 5.0 > double(dim))
    throw TruncationError("dim " + std::to_string(dim) + " too small for |alpha| = " +
                          std::to_string(r) + " (need " + std::to_string(min_coherent_dim(r)) + ")");
}
}  // namespace

QuantumState coherent_state(cplx alpha, int dim) {
  check_coherent_dim(alpha, dim);
  Vec v(dim);
  v(0) = std::exp(-0.5 * std::norm(alpha));
  for (int n = 1; n < dim; ++n) v(n) = v(n - 1) * alpha / std::sqrt(double(n));
  v /= v.norm();
  return QuantumState::pure(SubsystemLayout({dim}), v);
}

OperatorMatrix displacement(cplx alpha, int dim) {
  const Mat a = annihilation(dim).matrix();
  const Mat gen = alpha * a.adjoint() - std::conj(alpha) * a;  // anti-Hermitian
  const Mat h = cplx(0.0, 1.0) * gen;                          // Hermitian
  return {SubsystemLayout({dim}), expm_hermitian(h, cplx(0.0, -1.0))};
}

QuantumState coherent_state_by_displacement(cplx alpha, int dim) {
  check_coherent_dim(alpha, dim);
  Vec v = displacement(alpha, dim).matrix().col(0);
  v /= v.norm();
  return QuantumState::pure(SubsystemLayout({dim}), v);
}

QuantumState partial_trace(const QuantumState& state, const std::vector<int>& keep_in) {
  if (keep_in.empty()) throw InvalidArgument("partial_trace needs a non-empty keep set");
  const SubsystemLayout& l = state.layout();
  std::vector<int> keep = keep_in;
  std::sort(keep.begin(), keep.end());
  if (std::adjacent_find(keep.begin(), keep.end()) != keep.end())
    throw InvalidArgument("duplicate slot in keep set");
  for (int s : keep) (void)l.dim(s);

  std::vector<Eigen::Index> stride(std::size_t(l.slots()));
  Eigen::Index acc = 1;
  for (int s = l.slots() - 1; s >= 0; --s) {
    stride[std::size_t(s)] = acc;
    acc *= l.dim(s);
  }
  std::vector<int> traced;
  for (int s = 0; s < l.slots(); ++s)
    if (!std::binary_search(keep.begin(), keep.end(), s)) traced.push_back(s);

  auto offsets = [&](const std::vector<int>& slots) {
    std::vector<Eigen::Index> off{0};
    for (int s : slots) {
      std::vector<Eigen::Index> next;
      next.reserve(off.size() * std::size_t(l.dim(s)));
      for (Eigen::Index o : off)
        for (int k = 0; k < l.dim(s); ++k) next.push_back(o + k * stride[std::size_t(s)]);
      off = std::move(next);
    }
    return off;
  };
  const auto ok = offsets(keep);
  const auto ot = offsets(traced);
  const Eigen::Index nk = Eigen::Index(ok.size());

  std::vector<int> kept_dims;
  for (int s : keep) kept_dims.push_back(l.dim(s));
  SubsystemLayout out_layout(kept_dims);

  Mat red = Mat::Zero(nk, nk);
  if (state.kind() == StateKind::Pure) {
    const Vec& psi = state.vector();
    Mat m(nk, Eigen::Index(ot.size()));
    for (Eigen::Index i = 0; i < nk; ++i)
      for (std::size_t t = 0; t < ot.size(); ++t) m(i, Eigen::Index(t)) = psi(ok[std::size_t(i)] + ot[t]);
    red = m * m.adjoint();
  } else {
    const Mat rho = state.density();
    for (Eigen::Index i = 0; i < nk; ++i)
      for (Eigen::Index j = 0; j < nk; ++j) {
        cplx s = 0.0;
        for (Eigen::Index t : ot) s += rho(ok[std::size_t(i)] + t, ok[std::size_t(j)] + t);
        red(i, j) = s;
      }
  }
  // Inherit the input's tolerance: reduction does not add error beyond rounding.
  StateTolerance tol;
  tol.norm = 1e-6;
  tol.hermiticity = 1e-6;
  tol.min_eigenvalue = -1e-5;
  return QuantumState::mixed(out_layout, red, tol);
}

cplx expectation(const QuantumState& state, const OperatorMatrix& op) {
  if (!(state.layout() == op.layout())) throw LayoutError("expectation: layout mismatch");
  if (state.kind() == StateKind::Pure) return state.vector().dot(op.matrix() * state.vector());
  return (op.matrix() * state.density()).trace();
}

double purity(const QuantumState& state) {
  if (state.kind() == StateKind::Pure) return 1.0;
  const Mat rho = state.density();
  return (rho.transpose().cwiseProduct(rho)).sum().real();
}

}  // namespace cisim
