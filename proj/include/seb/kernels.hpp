#pragma once

// Dense double-precision inner loops. Every kernel has a scalar reference
// implementation; wider variants are picked at runtime from the CPU's
// capabilities and must agree with the reference to rounding.

#include <cstddef>
#include <string_view>
#include <vector>

namespace seb::kernels {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
  Backend backend;
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // C[m x n] (+)= A[m x k] * B[k x n]
  void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                  bool accumulate);
  // C[m x n] (+)= A[m x k] * B[n x k]^T
  void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                  bool accumulate);
  // C[m x n] (+)= A[k x m]^T * B[k x n]
  void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                  bool accumulate);
};

const KernelTable& scalar_table();
// nullptr when the variant was not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table();

// Every table usable on this machine, reference first.
std::vector<const KernelTable*> available_tables();

// The table used by tensor operations. Chosen on first use: the widest
// supported variant, unless SEB_KERNELS=scalar is set in the environment.
const KernelTable& active();
// Overrides the runtime choice; throws ConfigError if the backend is unavailable.
void select(Backend backend);

}  // namespace seb::kernels
