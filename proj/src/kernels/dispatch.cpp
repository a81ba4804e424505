#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_internal.hpp"
#include "seb/error.hpp"

namespace seb::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(SEB_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* default_table() {
  const char* env = std::getenv("SEB_KERNELS");
  if (env != nullptr && std::string(env) == "scalar") return &scalar_table();
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{default_table()};
  return table;
}

}  // namespace

const KernelTable* avx2_table() {
#if defined(SEB_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? &detail::avx2_table_unchecked() : nullptr;
#else
  return nullptr;
#endif
}

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (const KernelTable* t = avx2_table()) out.push_back(t);
  return out;
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

void select(Backend backend) {
  switch (backend) {
    case Backend::Scalar:
      current().store(&scalar_table());
      return;
    case Backend::Avx2:
      if (const KernelTable* t = avx2_table()) {
        current().store(t);
        return;
      }
      throw ConfigError("avx2 kernels are not available on this machine");
  }
}

}  // namespace seb::kernels
