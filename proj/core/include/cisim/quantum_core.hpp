#pragma once

#include <cstddef>
#include <vector>

#include "cisim/linalg.hpp"

namespace cisim {

// Ordered tensor-product layout. Slot 0 is the qubit by convention,
// then the tuning mode a, then the coupling mode b.
class SubsystemLayout {
 public:
  SubsystemLayout() = default;
  explicit SubsystemLayout(std::vector<int> dims);

  const std::vector<int>& dims() const { return dims_; }
  int slots() const { return int(dims_.size()); }
  int dim(int slot) const;
  Eigen::Index total() const { return total_; }

  friend bool operator==(const SubsystemLayout& l, const SubsystemLayout& r) {
    return l.dims_ == r.dims_;
  }

 private:
  std::vector<int> dims_;
  Eigen::Index total_ = 0;
};

class OperatorMatrix {
 public:
  OperatorMatrix() = default;
  // A Hermitian claim is verified: max|M - M^dagger| <= 1e-12 max|M|.
  OperatorMatrix(SubsystemLayout layout, Mat m, bool claim_hermitian = false);

  const SubsystemLayout& layout() const { return layout_; }
  const Mat& matrix() const { return m_; }
  bool is_hermitian(double rel_tol = 1e-12) const;
  OperatorMatrix adjoint() const;

  OperatorMatrix& operator+=(const OperatorMatrix& o);
  friend OperatorMatrix operator+(OperatorMatrix a, const OperatorMatrix& b) { return a += b; }
  friend OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator*(cplx s, const OperatorMatrix& a);
  friend OperatorMatrix operator*(double s, const OperatorMatrix& a) { return cplx(s) * a; }

 private:
  SubsystemLayout layout_;
  Mat m_;
};

enum class StateKind { Pure, Mixed };

struct StateTolerance {
  double norm = 1e-10;
  double hermiticity = 1e-10;
  double min_eigenvalue = -1e-8;
};

class QuantumState {
 public:
  QuantumState() = default;  // empty placeholder; use the factories
  static QuantumState pure(SubsystemLayout layout, Vec psi, double norm_tol = 1e-10);
  static QuantumState mixed(SubsystemLayout layout, Mat rho, const StateTolerance& tol = {});

  StateKind kind() const { return kind_; }
  const SubsystemLayout& layout() const { return layout_; }
  const Vec& vector() const;  // pure states only
  Mat density() const;

 private:
  SubsystemLayout layout_;
  StateKind kind_ = StateKind::Pure;
  Vec psi_;
  Mat rho_;
};

enum class Axis { X, Y, Z };

OperatorMatrix annihilation(int dim);
OperatorMatrix creation(int dim);
OperatorMatrix number(int dim);
OperatorMatrix identity(int dim);
// Electronic basis {|+>, |->}: sigma_x = diag(1,-1), sigma_y = |+><-| + |-><+|,
// sigma_z fixed by [sigma_x, sigma_y] = 2i sigma_z.
OperatorMatrix pauli(Axis axis);
// |+><+| and |-><-| in the electronic basis.
OperatorMatrix projector_plus();
OperatorMatrix projector_minus();

OperatorMatrix embed(const OperatorMatrix& op, int slot, const SubsystemLayout& layout);
OperatorMatrix tensor(const OperatorMatrix& a, const OperatorMatrix& b);
QuantumState tensor(const QuantumState& a, const QuantumState& b);
QuantumState tensor(const std::vector<QuantumState>& parts);

QuantumState basis_state(int dim, int n);
QuantumState qubit_plus();
QuantumState qubit_minus();

// Smallest dim passing the truncation rule dim >= |alpha|^2 + 5|alpha| + 5.
int min_coherent_dim(double abs_alpha);
QuantumState coherent_state(cplx alpha, int dim);
// exp(alpha a^dagger - alpha^* a)|0> on the truncated space.
QuantumState coherent_state_by_displacement(cplx alpha, int dim);
OperatorMatrix displacement(cplx alpha, int dim);

QuantumState partial_trace(const QuantumState& state, const std::vector<int>& keep);
cplx expectation(const QuantumState& state, const OperatorMatrix& op);
double purity(const QuantumState& state);

}  // namespace cisim
