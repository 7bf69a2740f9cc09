#include <cstdlib>
#include <string_view>

#include "worldwalk/kernels.hpp"

#if defined(WORLDWALK_HAVE_AVX2)
namespace worldwalk::kernels::avx2 {
void project_points(const ProjectInputs&, const ProjectOutputs&);
void unproject_points(const UnprojectInputs&, const UnprojectOutputs&);
double sum(std::span<const double>);
double dot(std::span<const double>, std::span<const double>);
}  // namespace worldwalk::kernels::avx2
#endif

namespace worldwalk::kernels {

const KernelTable* avx2_table() {
#if defined(WORLDWALK_HAVE_AVX2)
  static const KernelTable table{"avx2", &avx2::project_points, &avx2::unproject_points,
                                 &avx2::sum, &avx2::dot};
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    const char* env = std::getenv("WORLDWALK_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return scalar_table();
    if (const KernelTable* t = avx2_table()) return *t;
    return scalar_table();
  }();
  return chosen;
}

}  // namespace worldwalk::kernels
