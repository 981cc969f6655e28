#include <cmath>
#include <vector>

#include "doctest.h"
#include "matchlab/rng.hpp"

using namespace matchlab;

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

template <typename Draw>
Moments sample_moments(int n, Draw draw) {
  double mean = 0.0, m2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double x = static_cast<double>(draw());
    const double delta = x - mean;
    mean += delta / (k + 1);
    m2 += delta * (x - mean);
  }
  return {mean, m2 / (n - 1)};
}

}  // namespace

TEST_CASE("streams are deterministic and component-disjoint") {
  RngStream a(StreamKey{42, 7, 3, stream_id(StreamRole::Supply, 2)});
  RngStream b(StreamKey{42, 7, 3, stream_id(StreamRole::Supply, 2)});
  for (int k = 0; k < 100; ++k) CHECK(a.next_u64() == b.next_u64());

  RngStream c(StreamKey{42, 7, 3, stream_id(StreamRole::Supply, 3)});
  RngStream d(StreamKey{42, 7, 4, stream_id(StreamRole::Supply, 2)});
  RngStream e(StreamKey{43, 7, 3, stream_id(StreamRole::Supply, 2)});
  RngStream base(StreamKey{42, 7, 3, stream_id(StreamRole::Supply, 2)});
  int same_c = 0, same_d = 0, same_e = 0;
  for (int k = 0; k < 64; ++k) {
    const std::uint64_t x = base.next_u64();
    same_c += x == c.next_u64();
    same_d += x == d.next_u64();
    same_e += x == e.next_u64();
  }
  CHECK(same_c == 0);
  CHECK(same_d == 0);
  CHECK(same_e == 0);
}

TEST_CASE("uniform doubles cover [0,1) with the right mean") {
  RngStream r(StreamKey{5, 0, 0, 1});
  const int n = 200000;
  double mean = 0.0;
  for (int k = 0; k < n; ++k) {
    const double u = r.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    mean += u;
  }
  mean /= n;
  CHECK(std::fabs(mean - 0.5) < 5.0 / std::sqrt(12.0 * n));
}

TEST_CASE("poisson moments match under both sampling algorithms") {
  const double means[] = {0.7, 7.0, 29.9, 30.1, 150.0};
  const int n = 120000;
  int which = 0;
  for (const double m : means) {
    RngStream r(StreamKey{99, 0, 0, static_cast<std::uint64_t>(++which)});
    const Moments mom =
        sample_moments(n, [&] { return sample_poisson(m, r); });
    CHECK_MESSAGE(std::fabs(mom.mean - m) < 5.0 * std::sqrt(m / n),
                  "mean at rate " << m << ": " << mom.mean);
    const double var_se = std::sqrt((m + 2.0 * m * m) / n);
    CHECK_MESSAGE(std::fabs(mom.var - m) < 6.0 * var_se,
                  "variance at rate " << m << ": " << mom.var);
  }
}

TEST_CASE("inversion-only mode equals auto mode below the cutoff") {
  RngStream a(StreamKey{11, 0, 0, 1});
  RngStream b(StreamKey{11, 0, 0, 1});
  for (int k = 0; k < 2000; ++k) {
    const double m = 29.0 * (k % 100) / 100.0;
    CHECK(sample_poisson(m, a, PoissonMethod::Auto) ==
          sample_poisson(m, b, PoissonMethod::InversionOnly));
  }
}

TEST_CASE("chunked inversion stays exact at large means") {
  RngStream r(StreamKey{12, 0, 0, 1});
  const double m = 1200.0;  // three chunks; plain inversion would underflow
  const int n = 40000;
  const Moments mom = sample_moments(
      n, [&] { return sample_poisson(m, r, PoissonMethod::InversionOnly); });
  CHECK(std::fabs(mom.mean - m) < 5.0 * std::sqrt(m / n));
  const double var_se = std::sqrt((m + 2.0 * m * m) / n);
  CHECK(std::fabs(mom.var - m) < 6.0 * var_se);
}

TEST_CASE("poisson edge cases") {
  RngStream r(StreamKey{13, 0, 0, 1});
  for (int k = 0; k < 10; ++k) CHECK(sample_poisson(0.0, r) == 0);
  CHECK_THROWS_AS(sample_poisson(-1.0, r), InputError);
}
