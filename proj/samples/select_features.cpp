// Selects at most B features of a synthetic two-class dataset: compares the
// unrestricted SVM, the relaxation bounds, a kernel-search incumbent and the
// exact procedure.

#include "sparse_svm/dataio.hpp"
#include "sparse_svm/exact.hpp"
#include "sparse_svm/relaxations.hpp"
#include "sparse_svm/svm.hpp"

#include <cstdio>
#include <random>

using namespace sparse_svm;

namespace {

// Features 0..2 carry the class signal, the rest are noise.
Dataset make_data(int m, int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd X(m, n);
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) {
    y[i] = i % 2 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) X(i, j) = g(rng) + (j < 3 ? 0.8 * y[i] / (1 + j) : 0.0);
  }
  return standardize(Dataset(X, y)).first;
}

void print_support(const char* label, const PrimalPoint& p) {
  std::printf("%-16s objective %10.5f  features {", label, p.objective);
  for (std::size_t k = 0; k < p.support.size(); ++k) std::printf(k ? ", %d" : "%d", p.support[k]);
  std::printf("}\n");
}

}  // namespace

int main() {
  const Dataset data = make_data(120, 12, 3);
  const double C = 1.0;
  const int B = 3;

  const PrimalPoint svm = solve_svm(data, C);
  print_support("SVM (all)", svm);

  std::printf("%-16s %10.5f\n", "DSCoP bound", solve_dscop(data, C, B).lower_bound);

  HeuristicParams hp;
  hp.rho = 4;
  const HeuristicResult ks = run_strategy(data, C, B, hp, std::nullopt);
  print_support("kernel search", ks.point);

  ExactParams ep;
  ep.heur = hp;
  ep.s = 4;
  const ExactResult ex = exact_procedure(data, C, B, ep);
  print_support("exact", *ex.mip.incumbent);
  std::printf("exact: status %s, LB %.6f, UB %.6f, M %.4f, %zu iterations\n", to_string(ex.mip.status), ex.mip.LB,
              ex.mip.UB, ex.M, ex.trace.size());
  std::printf("training accuracy: SVM %.3f, %d-feature model %.3f\n", accuracy(svm, data), B,
              accuracy(*ex.mip.incumbent, data));
  return 0;
}
