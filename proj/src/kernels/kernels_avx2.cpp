// AVX2 variants. Compiled with -mavx2 only (no -mfma) so every lane performs
// exactly the scalar sequence of IEEE operations.

#include <immintrin.h>

#include <cmath>

#include "worldwalk/kernels.hpp"

namespace worldwalk::kernels::avx2 {

namespace {

inline __m256d negate(__m256d a) { return _mm256_xor_pd(a, _mm256_set1_pd(-0.0)); }

inline __m256d madd3(__m256d a0, __m256d b0, __m256d a1, __m256d b1, __m256d a2, __m256d b2) {
  return _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(a0, b0), _mm256_mul_pd(a1, b1)),
                       _mm256_mul_pd(a2, b2));
}

}  // namespace

void project_points(const ProjectInputs& in, const ProjectOutputs& out) {
  const double* r = in.world_to_camera.r;
  const double* c = in.camera_center;
  const PinholeParams& k = in.pinhole;
  const std::size_t n = in.x.size();

  const __m256d r0 = _mm256_set1_pd(r[0]), r1 = _mm256_set1_pd(r[1]), r2 = _mm256_set1_pd(r[2]);
  const __m256d r3 = _mm256_set1_pd(r[3]), r4 = _mm256_set1_pd(r[4]), r5 = _mm256_set1_pd(r[5]);
  const __m256d r6 = _mm256_set1_pd(r[6]), r7 = _mm256_set1_pd(r[7]), r8 = _mm256_set1_pd(r[8]);
  const __m256d c0 = _mm256_set1_pd(c[0]), c1 = _mm256_set1_pd(c[1]), c2 = _mm256_set1_pd(c[2]);
  const __m256d fx = _mm256_set1_pd(k.fx), fy = _mm256_set1_pd(k.fy);
  const __m256d cx = _mm256_set1_pd(k.cx), cy = _mm256_set1_pd(k.cy);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d neg_near = _mm256_set1_pd(-in.near_clip);
  const __m256d ulo = _mm256_set1_pd(in.u_lo), uhi = _mm256_set1_pd(in.u_hi);
  const __m256d vlo = _mm256_set1_pd(in.v_lo), vhi = _mm256_set1_pd(in.v_hi);

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(&in.x[i]), c0);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(&in.y[i]), c1);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(&in.z[i]), c2);
    const __m256d xc = madd3(r0, dx, r1, dy, r2, dz);
    const __m256d yc = madd3(r3, dx, r4, dy, r5, dz);
    const __m256d zc = madd3(r6, dx, r7, dy, r8, dz);
    const __m256d depth = negate(zc);
    const __m256d u = _mm256_add_pd(cx, _mm256_mul_pd(fx, _mm256_div_pd(xc, depth)));
    const __m256d v = _mm256_sub_pd(cy, _mm256_mul_pd(fy, _mm256_div_pd(yc, depth)));
    const __m256d ru = _mm256_floor_pd(_mm256_add_pd(u, half));
    const __m256d rv = _mm256_floor_pd(_mm256_add_pd(v, half));

    __m256d ok = _mm256_cmp_pd(zc, neg_near, _CMP_LT_OQ);
    ok = _mm256_and_pd(ok, _mm256_cmp_pd(ru, ulo, _CMP_GE_OQ));
    ok = _mm256_and_pd(ok, _mm256_cmp_pd(ru, uhi, _CMP_LE_OQ));
    ok = _mm256_and_pd(ok, _mm256_cmp_pd(rv, vlo, _CMP_GE_OQ));
    ok = _mm256_and_pd(ok, _mm256_cmp_pd(rv, vhi, _CMP_LE_OQ));

    // Zero rejected lanes before the int conversion, matching the scalar path.
    const __m128i pu = _mm256_cvttpd_epi32(_mm256_and_pd(ru, ok));
    const __m128i pv = _mm256_cvttpd_epi32(_mm256_and_pd(rv, ok));
    _mm_storeu_si128(reinterpret_cast<__m128i*>(&out.px[i]), pu);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(&out.py[i]), pv);
    _mm256_storeu_pd(&out.depth[i], depth);
    const int mask = _mm256_movemask_pd(ok);
    out.accepted[i + 0] = (mask >> 0) & 1;
    out.accepted[i + 1] = (mask >> 1) & 1;
    out.accepted[i + 2] = (mask >> 2) & 1;
    out.accepted[i + 3] = (mask >> 3) & 1;
  }
  if (i < n) {
    ProjectInputs tail = in;
    tail.x = in.x.subspan(i);
    tail.y = in.y.subspan(i);
    tail.z = in.z.subspan(i);
    scalar_table().project_points(tail, {out.px.subspan(i), out.py.subspan(i),
                                         out.depth.subspan(i), out.accepted.subspan(i)});
  }
}

void unproject_points(const UnprojectInputs& in, const UnprojectOutputs& out) {
  const double* r = in.camera_to_world.r;
  const double* t = in.translation;
  const PinholeParams& k = in.pinhole;
  const std::size_t n = in.u.size();

  const __m256d r0 = _mm256_set1_pd(r[0]), r1 = _mm256_set1_pd(r[1]), r2 = _mm256_set1_pd(r[2]);
  const __m256d r3 = _mm256_set1_pd(r[3]), r4 = _mm256_set1_pd(r[4]), r5 = _mm256_set1_pd(r[5]);
  const __m256d r6 = _mm256_set1_pd(r[6]), r7 = _mm256_set1_pd(r[7]), r8 = _mm256_set1_pd(r[8]);
  const __m256d t0 = _mm256_set1_pd(t[0]), t1 = _mm256_set1_pd(t[1]), t2 = _mm256_set1_pd(t[2]);
  const __m256d fx = _mm256_set1_pd(k.fx), fy = _mm256_set1_pd(k.fy);
  const __m256d cx = _mm256_set1_pd(k.cx), cy = _mm256_set1_pd(k.cy);
  const __m256d one = _mm256_set1_pd(1.0);

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_div_pd(_mm256_sub_pd(_mm256_loadu_pd(&in.u[i]), cx), fx);
    const __m256d dy = negate(_mm256_div_pd(_mm256_sub_pd(_mm256_loadu_pd(&in.v[i]), cy), fy));
    __m256d s = _mm256_loadu_pd(&in.depth[i]);
    if (in.ray_distance) {
      const __m256d len2 =
          _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)), one);
      s = _mm256_div_pd(s, _mm256_sqrt_pd(len2));
    }
    const __m256d xc = _mm256_mul_pd(dx, s);
    const __m256d yc = _mm256_mul_pd(dy, s);
    const __m256d zc = negate(s);
    _mm256_storeu_pd(&out.x[i], _mm256_add_pd(madd3(r0, xc, r1, yc, r2, zc), t0));
    _mm256_storeu_pd(&out.y[i], _mm256_add_pd(madd3(r3, xc, r4, yc, r5, zc), t1));
    _mm256_storeu_pd(&out.z[i], _mm256_add_pd(madd3(r6, xc, r7, yc, r8, zc), t2));
  }
  if (i < n) {
    UnprojectInputs tail = in;
    tail.u = in.u.subspan(i);
    tail.v = in.v.subspan(i);
    tail.depth = in.depth.subspan(i);
    scalar_table().unproject_points(tail, {out.x.subspan(i), out.y.subspan(i), out.z.subspan(i)});
  }
}

double sum(std::span<const double> a) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= a.size(); i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(&a[i]));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  for (; i < a.size(); ++i) lanes[i % 4] += a[i];
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double dot(std::span<const double> a, std::span<const double> b) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= a.size(); i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i])));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  for (; i < a.size(); ++i) lanes[i % 4] += a[i] * b[i];
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

}  // namespace worldwalk::kernels::avx2
